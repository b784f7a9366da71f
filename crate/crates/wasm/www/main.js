import init, { detect, softseg, synth_image, synth_ground_truth } from "./pkg/gbound_wasm.js";

const $ = (id) => document.getElementById(id);
const input = $("input");
const output = $("output");
let synthetic = true;

function status(text) {
  $("status").textContent = text;
}

function show(canvas, bytes, w, h) {
  canvas.width = w;
  canvas.height = h;
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(bytes), w, h), 0, 0);
}

function pixels() {
  const { width: w, height: h } = input;
  return [input.getContext("2d").getImageData(0, 0, w, h).data, w, h];
}

function timed(title, f) {
  try {
    const t = performance.now();
    const [bytes, w, h] = f();
    show(output, bytes, w, h);
    $("out-title").textContent = title;
    status(`${title}: ${(performance.now() - t).toFixed(0)} ms`);
  } catch (e) {
    status(`error: ${e.message ?? e}`);
  }
}

function makeScene() {
  const [w, h] = [128, 96];
  show(input, synth_image(Number($("seed").value), w, h, Number($("noise").value)), w, h);
  synthetic = true;
  $("truth").disabled = false;
}

function loadFile(file) {
  const img = new Image();
  img.onload = () => {
    const scale = Math.min(1, 256 / Math.max(img.width, img.height));
    input.width = Math.round(img.width * scale);
    input.height = Math.round(img.height * scale);
    input.getContext("2d").drawImage(img, 0, 0, input.width, input.height);
    URL.revokeObjectURL(img.src);
    synthetic = false;
    $("truth").disabled = true;
    status(`loaded ${file.name} at ${input.width}x${input.height}`);
  };
  img.src = URL.createObjectURL(file);
}

await init();

for (const id of ["radius", "noise"]) {
  $(id).addEventListener("input", () => ($(`${id}-val`).textContent = $(id).value));
}
$("make").addEventListener("click", makeScene);
$("seed").addEventListener("change", makeScene);
$("file").addEventListener("change", (e) => e.target.files[0] && loadFile(e.target.files[0]));

$("detect").addEventListener("click", () =>
  timed("Boundary strength", () => {
    const [data, w, h] = pixels();
    const r = Number($("radius").value);
    return [detect(data, w, h, r, $("fast").checked, $("thin").checked, $("lab").checked), w, h];
  })
);

$("softseg").addEventListener("click", () =>
  timed("Soft segmentation (layers 1-3)", () => {
    const [data, w, h] = pixels();
    return [softseg(data, w, h, Number($("samples").value)), w, h];
  })
);

$("truth").addEventListener("click", () => {
  if (!synthetic) return;
  timed("Ground truth", () => [synth_ground_truth(Number($("seed").value), input.width, input.height), input.width, input.height]);
});

makeScene();
status("ready");

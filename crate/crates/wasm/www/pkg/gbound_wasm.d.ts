/* tslint:disable */
/* eslint-disable */

/**
 * Boundary strength of an RGBA image as grey RGBA.
 *
 * `fast` selects the integral-image detector; otherwise the exact detector
 * with Gaussian weights runs. `thin` applies non-maxima suppression.
 */
export function detect(rgba: Uint8Array, width: number, height: number, radius: number, fast: boolean, thin: boolean, lab: boolean): Uint8Array;

/**
 * First three soft-segmentation layers as RGB.
 */
export function softseg(rgba: Uint8Array, width: number, height: number, samples: number): Uint8Array;

export function synth_ground_truth(seed: number, width: number, height: number): Uint8Array;

export function synth_image(seed: number, width: number, height: number, noise: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly detect: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly softseg: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly synth_ground_truth: (a: number, b: number, c: number) => [number, number, number, number];
    readonly synth_image: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;

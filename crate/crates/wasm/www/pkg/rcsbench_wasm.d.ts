/* tslint:disable */
/* eslint-disable */

/**
 * Magnitudes and operator Schmidt spectrum of one fSim gate.
 */
export function fsimExplorer(theta: number, phi: number, delta_plus: number, delta_minus: number, delta_minus_off: number): string;

/**
 * Speedup of truncated Schmidt-path simulation against `|δθ|` for `g` identical cross gates.
 */
export function sfaCurve(g: number, phi: number, fidelity: number, max_delta_theta: number, points: number): string;

/**
 * Simulates a random `rows x cols` circuit, draws speckle samples at `fidelity` and scores them.
 */
export function xebExplorer(rows: number, cols: number, cycles: number, seed: bigint, fidelity: number, n_samples: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fsimExplorer: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly sfaCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly xebExplorer: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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

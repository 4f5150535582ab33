/* tslint:disable */
/* eslint-disable */

/**
 * A matrix, its CUR approximation and the chosen cross.
 */
export class CurView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    cols(): number;
    /**
     * `|A − B|` in row-major order.
     */
    error(): Float64Array;
    pivot_cols(): Uint32Array;
    pivot_rows(): Uint32Array;
    /**
     * `‖A − B‖ / ‖A‖`.
     */
    relative_error(): number;
    rows(): number;
}

/**
 * Objective traces of several solvers started from one random tuple.
 */
export class Traces {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    is_empty(): boolean;
    len(): number;
    name(i: number): string;
    /**
     * `‖P(T)‖` after each iteration.
     */
    norms(i: number): Float64Array;
    stop(i: number): string;
    tensor_norm(): number;
}

/**
 * Runs AMM, MAMM, 2AMMV and hybrid Newton-2 on the generated tensor.
 */
export function compare_traces(spec: string, ranks: string, seed: number, max_iters: number): Traces;

/**
 * CUR approximation of a generated matrix from the best of 200 random
 * `k × k` crosses.
 */
export function cur_heatmap(spec: string, k: number, optimal: boolean, seed: number): CurView;

/**
 * `[fraction of rank ≤ 2, standard error]` over Gaussian 2×2×2 samples.
 */
export function rank222_fraction(samples: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_curview_free: (a: number, b: number) => void;
    readonly __wbg_traces_free: (a: number, b: number) => void;
    readonly compare_traces: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly cur_heatmap: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly curview_cols: (a: number) => number;
    readonly curview_error: (a: number) => [number, number];
    readonly curview_pivot_cols: (a: number) => [number, number];
    readonly curview_pivot_rows: (a: number) => [number, number];
    readonly curview_relative_error: (a: number) => number;
    readonly curview_rows: (a: number) => number;
    readonly rank222_fraction: (a: number, b: number) => [number, number, number, number];
    readonly traces_is_empty: (a: number) => number;
    readonly traces_len: (a: number) => number;
    readonly traces_name: (a: number, b: number) => [number, number];
    readonly traces_norms: (a: number, b: number) => [number, number];
    readonly traces_stop: (a: number, b: number) => [number, number];
    readonly traces_tensor_norm: (a: number) => number;
    readonly __externref_table_alloc: () => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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

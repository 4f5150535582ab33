/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_curview_free: (a: number, b: number) => void;
export const __wbg_traces_free: (a: number, b: number) => void;
export const compare_traces: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const cur_heatmap: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const curview_cols: (a: number) => number;
export const curview_error: (a: number) => [number, number];
export const curview_pivot_cols: (a: number) => [number, number];
export const curview_pivot_rows: (a: number) => [number, number];
export const curview_relative_error: (a: number) => number;
export const curview_rows: (a: number) => number;
export const rank222_fraction: (a: number, b: number) => [number, number, number, number];
export const traces_is_empty: (a: number) => number;
export const traces_len: (a: number) => number;
export const traces_name: (a: number, b: number) => [number, number];
export const traces_norms: (a: number, b: number) => [number, number];
export const traces_stop: (a: number, b: number) => [number, number];
export const traces_tensor_norm: (a: number) => number;
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;

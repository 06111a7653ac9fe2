/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_facility_free: (a: number, b: number) => void;
export const facility_greedy: (a: number) => [number, number];
export const facility_grid: (a: number) => [number, number];
export const facility_height: (a: number) => number;
export const facility_improve: (a: number, b: number, c: number, d: number) => [number, number];
export const facility_input: (a: number) => [number, number];
export const facility_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
export const facility_objective: (a: number, b: number, c: number) => [number, number, number];
export const facility_radii: (a: number) => [number, number];
export const facility_width: (a: number) => number;
export const normalized_scores: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const time_penalty: (a: number, b: number, c: number) => [number, number, number, number];
export const time_penalty_curve: (a: number, b: number, c: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;

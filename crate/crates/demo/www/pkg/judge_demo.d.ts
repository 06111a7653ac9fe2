/* tslint:disable */
/* eslint-disable */

/**
 * A generated facility instance the page can draw and play with.
 */
export class Facility {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Centers as `[x0, y0, x1, y1, ...]`.
     */
    greedy(): Int32Array;
    /**
     * Row-major discontent values.
     */
    grid(): Uint32Array;
    height(): number;
    improve(centers: Int32Array, rounds: number): Int32Array;
    /**
     * Input file text for this instance.
     */
    input(): string;
    constructor(width: number, height: number, factories: number, seed: bigint);
    /**
     * Objective of a placement, or an error naming why it is infeasible.
     */
    objective(centers: Int32Array): number;
    radii(): Uint32Array;
    width(): number;
}

/**
 * Normalized scores of a submission history, recomputed after the last
 * arrival. `values` is row-major, one row of `instances` objective values
 * per submission; a negative value marks a failed instance. Returns one
 * decimal string per submission.
 */
export function normalized_scores(maximize: boolean, instances: number, values: Float64Array): string[];

/**
 * Exact time-penalized score as decimal text.
 */
export function time_penalty(max_points: number, time_limit: number, cpu_time: number): string;

/**
 * The penalty curve sampled at `samples + 1` evenly spaced cpu times.
 */
export function time_penalty_curve(max_points: number, time_limit: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_facility_free: (a: number, b: number) => void;
    readonly facility_greedy: (a: number) => [number, number];
    readonly facility_grid: (a: number) => [number, number];
    readonly facility_height: (a: number) => number;
    readonly facility_improve: (a: number, b: number, c: number, d: number) => [number, number];
    readonly facility_input: (a: number) => [number, number];
    readonly facility_new: (a: number, b: number, c: number, d: bigint) => [number, number, number];
    readonly facility_objective: (a: number, b: number, c: number) => [number, number, number];
    readonly facility_radii: (a: number) => [number, number];
    readonly facility_width: (a: number) => number;
    readonly normalized_scores: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly time_penalty: (a: number, b: number, c: number) => [number, number, number, number];
    readonly time_penalty_curve: (a: number, b: number, c: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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

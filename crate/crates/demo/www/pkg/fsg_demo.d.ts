/* tslint:disable */
/* eslint-disable */

/**
 * Triangulated appearance map over `(yaw, pitch)` points.
 */
export class MapDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Input indices of the views that survived pruning, in vertex order.
     */
    kept(): Uint32Array;
    /**
     * `points` holds `yaw, pitch` pairs in degrees. Points closer than
     * `radius` to an earlier kept point are pruned.
     */
    constructor(points: Float64Array, radius: number);
    /**
     * `[v0, v1, v2, w0, w1, w2]`: the enclosing triangle and its view
     * weights (zero on corners).
     */
    query(yaw: number, pitch: number): Float64Array;
    /**
     * Vertex index triples.
     */
    triangles(): Uint32Array;
    /**
     * `yaw, pitch` of every vertex: the kept views, then the four corners.
     */
    vertices(): Float64Array;
}

/**
 * Seamlessly clones `source` into `target` where `mask` is non-zero.
 * Buffers are RGBA; the result is RGBA with full alpha.
 */
export function poisson_blend(width: number, height: number, target: Uint8Array, source: Uint8Array, mask: Uint8Array): Uint8Array;

/**
 * Max over the landmark channels of the Gaussian heatmap, as RGBA.
 * `points` holds `x, y` pairs in pixels.
 */
export function render_heatmap(width: number, height: number, points: Float64Array, sigma: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_mapdemo_free: (a: number, b: number) => void;
    readonly mapdemo_kept: (a: number) => [number, number];
    readonly mapdemo_new: (a: number, b: number, c: number) => [number, number, number];
    readonly mapdemo_query: (a: number, b: number, c: number) => [number, number, number, number];
    readonly mapdemo_triangles: (a: number) => [number, number];
    readonly mapdemo_vertices: (a: number) => [number, number];
    readonly poisson_blend: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly render_heatmap: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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

/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_mapdemo_free: (a: number, b: number) => void;
export const mapdemo_kept: (a: number) => [number, number];
export const mapdemo_new: (a: number, b: number, c: number) => [number, number, number];
export const mapdemo_query: (a: number, b: number, c: number) => [number, number, number, number];
export const mapdemo_triangles: (a: number) => [number, number];
export const mapdemo_vertices: (a: number) => [number, number];
export const poisson_blend: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
export const render_heatmap: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;

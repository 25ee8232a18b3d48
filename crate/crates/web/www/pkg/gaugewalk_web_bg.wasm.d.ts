/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_walkdemo_free: (a: number, b: number) => void;
export const curvature_json: (a: number) => [number, number, number, number];
export const trajectory_json: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const walkdemo_advance: (a: number, b: number) => [number, number, number];
export const walkdemo_density: (a: number) => [number, number];
export const walkdemo_mean_position: (a: number) => [number, number, number];
export const walkdemo_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const walkdemo_norm: (a: number) => number;
export const walkdemo_positions: (a: number) => [number, number];
export const walkdemo_time: (a: number) => number;
export const __wbindgen_export_0: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;

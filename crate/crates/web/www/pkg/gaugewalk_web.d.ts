/* tslint:disable */
/* eslint-disable */
/**
 * Walker `x̄(t)` and the classical trajectory, as JSON.
 */
export function trajectory_json(e_ym: number, mass: number, sigma: number, k0: number, t_max: number): string;
/**
 * Curvature remainder and extraction error over the ε-halving table, as JSON.
 */
export function curvature_json(e_ym: number): string;
/**
 * A walker packet that advances on demand.
 */
export class WalkDemo {
  free(): void;
  [Symbol.dispose](): void;
  mean_position(): number;
  constructor(e_ym: number, mass: number, sigma: number, k0: number, epsilon: number, x_max: number);
  /**
   * `Σ|ψ|² ε`.
   */
  norm(): number;
  time(): number;
  /**
   * Returns the number of steps actually taken.
   */
  advance(steps: number): number;
  /**
   * Probability density per site, ordered by position.
   */
  density(): Float64Array;
  positions(): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
  readonly memory: WebAssembly.Memory;
  readonly __wbg_walkdemo_free: (a: number, b: number) => void;
  readonly curvature_json: (a: number) => [number, number, number, number];
  readonly trajectory_json: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
  readonly walkdemo_advance: (a: number, b: number) => [number, number, number];
  readonly walkdemo_density: (a: number) => [number, number];
  readonly walkdemo_mean_position: (a: number) => [number, number, number];
  readonly walkdemo_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
  readonly walkdemo_norm: (a: number) => number;
  readonly walkdemo_positions: (a: number) => [number, number];
  readonly walkdemo_time: (a: number) => number;
  readonly __wbindgen_export_0: WebAssembly.Table;
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

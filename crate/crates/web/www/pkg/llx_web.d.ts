/* tslint:disable */
/* eslint-disable */

/**
 * Full analysis of a spec: the report, the LaTeX rendering of `L`, `M`
 * and `I`, and the exit code the command-line tool would return.
 */
export function analyze(spec_json: string): string;

/**
 * Builds a Liénard pair from one coefficient. `mode` is `g-from-f` or
 * `f-from-g`; `params_json` maps parameter names to values.
 */
export function construct(mode: string, expr: string, constant: number, params_json: string): string;

/**
 * Names and titles of the built-in systems.
 */
export function corpus(): string;

/**
 * The spec of a built-in system.
 */
export function fixture_spec(name: string): string;

/**
 * Trajectory of a spec with the integral and the Lax residual at every
 * sample.
 */
export function trajectory(spec_json: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly analyze: (a: number, b: number) => [number, number, number, number];
    readonly construct: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly corpus: () => [number, number];
    readonly fixture_spec: (a: number, b: number) => [number, number, number, number];
    readonly trajectory: (a: number, b: number) => [number, number, number, number];
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

/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const driftView: (a: number, b: bigint) => [number, number, number, number];
export const meteorCurve: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const transferComparison: (a: number, b: bigint) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;

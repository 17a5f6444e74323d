/**
 * Read an opfkit dataset from disk: case.json plus the per-split HDF5
 * groups, converted to plain typed arrays. 1-based indices from the case
 * file are converted to 0-based with an explicit flag.
 */

import { readFileSync, existsSync } from "node:fs";
import { join } from "node:path";
import h5wasm from "h5wasm/node";

import { CaseCounts, Formulation, Split } from "./schema.js";

export interface NdArray {
  shape: number[];
  data: Float64Array;
}

export interface CaseData {
  name: string;
  counts: CaseCounts;
  refBus: number; // 0-based
  baseMva: number;
  zeroBased: true;
  gs: Float64Array;
  bs: Float64Array;
  pdRef: Float64Array;
  qdRef: Float64Array;
  cost: Float64Array;
  genBus: Int32Array;
  loadBus: Int32Array;
  busFr: Int32Array;
  busTo: Int32Array;
  b: Float64Array;
  raw: Record<string, unknown>;
}

export interface H5Table {
  arrays: Map<string, NdArray>;
  strings: Map<string, string[]>;
}

export class DatasetError extends Error {}

export function loadCase(root: string): CaseData {
  const path = join(root, "case.json");
  if (!existsSync(path)) {
    throw new DatasetError(`missing ${path}`);
  }
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  const toIdx = (xs: number[]) => Int32Array.from(xs, (v) => v - 1);
  return {
    name: String(raw.case),
    counts: { N: raw.N, E: raw.E, L: raw.L, G: raw.G },
    refBus: raw.ref_bus - 1,
    baseMva: raw.base_mva,
    zeroBased: true,
    gs: Float64Array.from(raw.gs),
    bs: Float64Array.from(raw.bs),
    pdRef: Float64Array.from(raw.pd),
    qdRef: Float64Array.from(raw.qd),
    cost: Float64Array.from(raw.c1),
    genBus: toIdx(raw.gen_bus),
    loadBus: toIdx(raw.load_bus),
    busFr: toIdx(raw.bus_fr),
    busTo: toIdx(raw.bus_to),
    b: Float64Array.from(raw.b),
    raw,
  };
}

export async function readH5(path: string): Promise<H5Table> {
  await h5wasm.ready;
  if (!existsSync(path)) {
    throw new DatasetError(`missing ${path}`);
  }
  const file = new h5wasm.File(path, "r");
  const arrays = new Map<string, NdArray>();
  const strings = new Map<string, string[]>();
  try {
    const visit = (prefix: string, group: InstanceType<typeof h5wasm.Group>) => {
      for (const key of group.keys()) {
        const item = group.get(key);
        const name = prefix ? `${prefix}/${key}` : key;
        if (item instanceof h5wasm.Group) {
          visit(name, item);
        } else if (item instanceof h5wasm.Dataset) {
          const value = item.value;
          if (typeof value === "string" || (Array.isArray(value)
              && (value.length === 0 || typeof value[0] === "string"))) {
            strings.set(name,
              typeof value === "string" ? [value] : (value as string[]));
          } else {
            const flat = value as ArrayLike<number | bigint>;
            arrays.set(name, {
              shape: (item.shape ?? []).slice(),
              data: Float64Array.from(flat as ArrayLike<number>, Number),
            });
          }
        }
      }
    };
    visit("", file as unknown as InstanceType<typeof h5wasm.Group>);
  } finally {
    file.close();
  }
  return { arrays, strings };
}

export interface FormTables {
  primal: H5Table;
  dual: H5Table;
  meta: H5Table;
}

export interface SplitData {
  input: H5Table;
  formulations: Map<Formulation, FormTables>;
}

export function detectFormulations(root: string, split: Split): Formulation[] {
  const names: Formulation[] = [];
  for (const f of ["ACOPF", "DCOPF", "SOCOPF"] as Formulation[]) {
    if (existsSync(join(root, split, f))) {
      names.push(f);
    }
  }
  return names;
}

export async function loadSplit(root: string, split: Split): Promise<SplitData> {
  const input = await readH5(join(root, split, "input.h5"));
  const formulations = new Map<Formulation, FormTables>();
  for (const f of detectFormulations(root, split)) {
    formulations.set(f, {
      primal: await readH5(join(root, split, f, "primal.h5")),
      dual: await readH5(join(root, split, f, "dual.h5")),
      meta: await readH5(join(root, split, f, "meta.h5")),
    });
  }
  return { input, formulations };
}

/** Row slice of a 2-d (or trailing-dim) array. */
export function row(arr: NdArray, k: number): Float64Array {
  const width = arr.shape.slice(1).reduce((a, b) => a * b, 1);
  return arr.data.subarray(k * width, (k + 1) * width);
}

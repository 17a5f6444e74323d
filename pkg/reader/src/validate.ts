/**
 * Schema validation of a dataset directory: every table key present with
 * the exact shape implied by the case counts, seeds aligned across files.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";

import { loadCase, loadSplit, DatasetError } from "./loader.js";
import {
  CASE_NESTED_KEYS, CASE_SCALAR_KEYS, CASE_VECTOR_KEYS, META_KEYS,
  SPLITS, STRING_META, expectedShapes, inputShapes,
} from "./schema.js";

export interface ValidationResult {
  ok: boolean;
  errors: string[];
  counts: Record<string, number>;
}

function shapeEq(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((v, i) => v === b[i]);
}

export async function validateDataset(root: string): Promise<ValidationResult> {
  const errors: string[] = [];
  const counts: Record<string, number> = {};

  let caseData;
  try {
    caseData = loadCase(root);
  } catch (err) {
    return { ok: false, errors: [String(err)], counts };
  }
  const raw = caseData.raw as Record<string, unknown>;
  for (const key of CASE_SCALAR_KEYS) {
    if (!(key in raw)) errors.push(`case.json missing key ${key}`);
  }
  for (const [key, dim] of Object.entries(CASE_VECTOR_KEYS)) {
    const arr = raw[key] as unknown[];
    if (!Array.isArray(arr)) {
      errors.push(`case.json missing vector ${key}`);
    } else if (arr.length !== caseData.counts[dim]) {
      errors.push(`case.json ${key}: length ${arr.length}, `
        + `expected ${caseData.counts[dim]}`);
    }
  }
  for (const [key, dim] of Object.entries(CASE_NESTED_KEYS)) {
    const arr = raw[key] as unknown[];
    if (!Array.isArray(arr) || arr.length !== caseData.counts[dim]) {
      errors.push(`case.json ${key}: expected ${caseData.counts[dim]} lists`);
    }
  }
  for (const key of ["A", "Ag"]) {
    const coo = raw[key] as Record<string, unknown> | undefined;
    if (!coo || !Array.isArray(coo.rows) || !Array.isArray(coo.cols)
        || !Array.isArray(coo.values)) {
      errors.push(`case.json ${key}: expected COO triplets`);
    }
  }

  for (const split of SPLITS) {
    if (!existsSync(join(root, split))) {
      errors.push(`missing split directory ${split}`);
      continue;
    }
    let data;
    try {
      data = await loadSplit(root, split);
    } catch (err) {
      errors.push(`${split}: ${err instanceof Error ? err.message : err}`);
      continue;
    }
    const pd = data.input.arrays.get("data/pd");
    if (!pd) {
      errors.push(`${split}/input.h5 missing data/pd`);
      continue;
    }
    const n = pd.shape[0];
    counts[split] = n;
    for (const [key, shape] of inputShapes(caseData.counts, n)) {
      const arr = data.input.arrays.get(key);
      if (!arr) {
        errors.push(`${split}/input.h5 missing ${key}`);
      } else if (!shapeEq(arr.shape, shape)) {
        errors.push(`${split}/input.h5 ${key}: shape [${arr.shape}], `
          + `expected [${shape}]`);
      }
    }
    if (!data.input.strings.has("meta/config")) {
      errors.push(`${split}/input.h5 missing meta/config`);
    }
    if (data.formulations.size === 0) {
      errors.push(`${split}: no formulation directories`);
    }
    for (const [fname, tables] of data.formulations) {
      const shapes = expectedShapes(caseData.counts, fname, n);
      for (const [key, shape] of shapes) {
        const [part, name] = key.split("/", 2) as
          ["primal" | "dual" | "meta", string];
        const table = tables[part];
        const holder = META_KEYS.includes(name as never)
          && STRING_META.has(name) ? table.strings : table.arrays;
        const entry = holder.get(name);
        if (!entry) {
          errors.push(`${split}/${fname} missing ${key}`);
          continue;
        }
        if ("shape" in (entry as object)) {
          const got = (entry as { shape: number[] }).shape;
          if (!shapeEq(got, shape)) {
            errors.push(`${split}/${fname} ${key}: shape [${got}], `
              + `expected [${shape}]`);
          }
        } else if ((entry as string[]).length !== n) {
          errors.push(`${split}/${fname} ${key}: ${(entry as string[]).length} `
            + `strings, expected ${n}`);
        }
      }
      const seeds = data.input.arrays.get("meta/seeds");
      const metaSeed = tables.meta.arrays.get("seed");
      if (seeds && metaSeed) {
        for (let k = 0; k < n; k++) {
          if (seeds.data[k] !== metaSeed.data[k]) {
            errors.push(`${split}/${fname} seed row ${k} does not match input`);
            break;
          }
        }
      }
    }
  }
  return { ok: errors.length === 0, errors, counts };
}

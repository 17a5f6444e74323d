/**
 * Independent recomputation of DC constraint residuals and duality gaps
 * from the raw dataset arrays, used as a cross-implementation oracle.
 */

import { CaseData, FormTables, H5Table, NdArray, row } from "./loader.js";

export interface DcResiduals {
  kcl: Float64Array;   // |injection - demand - gs| per bus
  ohm: Float64Array;   // |-b (va_i - va_j) - pf| per in-service branch
}

export function dcResiduals(
  caseData: CaseData, input: H5Table, primal: H5Table, k: number,
): DcResiduals {
  const { N, E, G } = caseData.counts;
  const pd = row(input.arrays.get("data/pd")!, k);
  const branchOn = row(input.arrays.get("data/branch_status")!, k);
  const genOn = row(input.arrays.get("data/gen_status")!, k);
  const pg = row(primal.arrays.get("pg")!, k);
  const va = row(primal.arrays.get("va")!, k);
  const pf = row(primal.arrays.get("pf")!, k);

  const inj = new Float64Array(N);
  for (let g = 0; g < G; g++) {
    if (genOn[g] !== 0) inj[caseData.genBus[g]] += pg[g];
  }
  for (let e = 0; e < E; e++) {
    if (branchOn[e] === 0) continue;
    inj[caseData.busFr[e]] -= pf[e];
    inj[caseData.busTo[e]] += pf[e];
  }
  const demand = new Float64Array(N);
  for (let l = 0; l < caseData.loadBus.length; l++) {
    demand[caseData.loadBus[l]] += pd[l];
  }
  const kcl = new Float64Array(N);
  for (let i = 0; i < N; i++) {
    kcl[i] = Math.abs(inj[i] - demand[i] - caseData.gs[i]);
  }
  const ohm = new Float64Array(E);
  for (let e = 0; e < E; e++) {
    if (branchOn[e] === 0) continue;
    const delta = va[caseData.busFr[e]] - va[caseData.busTo[e]];
    ohm[e] = Math.abs(-caseData.b[e] * delta - pf[e]);
  }
  return { kcl, ohm };
}

export interface GapStats {
  maxRelativeGap: number;
  solved: number;
}

/** Relative primal-dual gaps from the metadata objective columns. */
export function dualityGaps(tables: FormTables): GapStats {
  const primal = tables.meta.arrays.get("primal_objective_value")!;
  const dual = tables.meta.arrays.get("dual_objective_value")!;
  let worst = 0;
  let solved = 0;
  for (let k = 0; k < primal.shape[0]; k++) {
    const p = primal.data[k];
    const d = dual.data[k];
    if (!Number.isFinite(p) || !Number.isFinite(d)) continue;
    solved += 1;
    worst = Math.max(worst, Math.abs(p - d) / Math.max(1, Math.abs(p)));
  }
  return { maxRelativeGap: worst, solved };
}

export function predictedCost(caseData: CaseData, pg: Float64Array): number {
  let total = 0;
  for (let g = 0; g < pg.length; g++) total += caseData.cost[g] * pg[g];
  return total;
}

/**
 * Expected keys and array shapes of an opfkit dataset, derived from the
 * case description counts. Mirrors the on-disk layout contract so a
 * dataset produced elsewhere can be checked independently.
 */

export interface CaseCounts {
  N: number; // buses
  E: number; // branches
  L: number; // loads
  G: number; // generators
}

export type Formulation = "ACOPF" | "DCOPF" | "SOCOPF";

export const SPLITS = ["train", "test", "infeasible"] as const;
export type Split = (typeof SPLITS)[number];

export const META_KEYS = [
  "formulation",
  "termination_status",
  "primal_status",
  "dual_status",
  "solve_time",
  "build_time",
  "extract_time",
  "primal_objective_value",
  "dual_objective_value",
  "seed",
] as const;

export const STRING_META = new Set([
  "formulation",
  "termination_status",
  "primal_status",
  "dual_status",
]);

export const CASE_SCALAR_KEYS = ["case", "N", "E", "L", "G", "ref_bus", "base_mva"];
export const CASE_VECTOR_KEYS: Record<string, keyof CaseCounts> = {
  vnom: "N", gs: "N", bs: "N", vmin: "N", vmax: "N",
  pd: "L", qd: "L", load_bus: "L",
  pgmin: "G", pgmax: "G", qgmin: "G", qgmax: "G", c1: "G", gen_bus: "G",
  dvamin: "E", dvamax: "E", smax: "E", bus_fr: "E", bus_to: "E",
  g: "E", b: "E",
  gff: "E", gft: "E", gtf: "E", gtt: "E",
  bff: "E", bft: "E", btf: "E", btt: "E",
};
export const CASE_NESTED_KEYS: Record<string, keyof CaseCounts> = {
  bus_arcs_fr: "N", bus_arcs_to: "N", bus_gens: "N", bus_loads: "N",
};

const PRIMAL_KEYS: Record<Formulation, string[]> = {
  DCOPF: ["pg", "va", "pf"],
  SOCOPF: ["pg", "qg", "w", "wr", "wi", "pf", "pt", "qf", "qt"],
  ACOPF: ["pg", "qg", "vm", "va", "pf", "qf", "pt", "qt"],
};

function boundPairs(names: string[]): string[] {
  return names.flatMap((n) => [`${n}_lb`, `${n}_ub`]);
}

const DUAL_KEYS: Record<Formulation, string[]> = {
  DCOPF: ["slack_bus", "kcl", "ohm", "va_diff", ...boundPairs(["pg", "pf"])],
  SOCOPF: [
    "kcl_p", "kcl_q", "ohm_pf", "ohm_qf", "ohm_pt", "ohm_qt",
    "sm_fr", "sm_to", "jabr", "va_diff_lb", "va_diff_ub",
    ...boundPairs(["w", "wr", "wi", "pg", "qg", "pf", "qf", "pt", "qt"]),
  ],
  ACOPF: [
    "slack_bus", "kcl_p", "kcl_q", "ohm_pf", "ohm_qf", "ohm_pt", "ohm_qt",
    "sm_fr", "sm_to", "va_diff",
    ...boundPairs(["pg", "qg", "vm", "pf", "qf", "pt", "qt"]),
  ],
};

function dimOf(key: string, c: CaseCounts): number {
  const base = key.replace(/_(lb|ub)$/, "");
  switch (base) {
    case "pg": case "qg": return c.G;
    case "vm": case "va": case "w": case "kcl": case "kcl_p": case "kcl_q":
      return c.N;
    case "slack_bus": return 1;
    default: return c.E; // branch-indexed groups
  }
}

/** Map "primal/<key>" | "dual/<key>" | "meta/<key>" to its shape. */
export function expectedShapes(
  counts: CaseCounts, formulation: Formulation, n: number,
): Map<string, number[]> {
  const shapes = new Map<string, number[]>();
  for (const key of PRIMAL_KEYS[formulation]) {
    shapes.set(`primal/${key}`, [n, dimOf(key, counts)]);
  }
  for (const key of DUAL_KEYS[formulation]) {
    if (formulation === "SOCOPF" && (key === "sm_fr" || key === "sm_to")) {
      shapes.set(`dual/${key}`, [n, counts.E, 3]);
    } else if (key === "jabr") {
      shapes.set(`dual/${key}`, [n, counts.E, 4]);
    } else {
      shapes.set(`dual/${key}`, [n, dimOf(key, counts)]);
    }
  }
  for (const key of META_KEYS) {
    shapes.set(`meta/${key}`, [n, 1]);
  }
  return shapes;
}

export function inputShapes(counts: CaseCounts, n: number): Map<string, number[]> {
  return new Map([
    ["data/pd", [n, counts.L]],
    ["data/qd", [n, counts.L]],
    ["data/branch_status", [n, counts.E]],
    ["data/gen_status", [n, counts.G]],
    ["meta/seeds", [n]],
  ]);
}

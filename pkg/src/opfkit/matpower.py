"""MATPOWER ``.m`` case parsing and preprocessing into a basic network.

``parse_matpower`` captures the raw tables exactly as written (original
units: MW, MVAr, degrees); ``make_basic`` filters out-of-service equipment,
renumbers buses consecutively, converts to per-unit, and produces a
:class:`Network`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .network import Network, branch_admittance

# column counts of the declared MATPOWER tables (extra columns are dropped)
BUS_COLS = 13      # bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin
GEN_COLS = 10      # bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin
BRANCH_COLS = 13   # fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax

# angle window substituted when MATPOWER marks the constraint unbounded
DEFAULT_DVA = math.radians(60.0)


class MatpowerError(ValueError):
    """Malformed MATPOWER text or invalid case data."""


@dataclass
class ParseDiagnostics:
    """Non-fatal observations made while parsing/preprocessing a case."""

    warnings: list[tuple[int, str]] = field(default_factory=list)
    ignored: list[str] = field(default_factory=list)

    def warn(self, line: int, message: str):
        self.warnings.append((line, message))

    def ignore(self, what: str):
        if what not in self.ignored:
            self.ignored.append(what)


@dataclass
class RawCase:
    """Verbatim MATPOWER tables in original units."""

    name: str
    base_mva: float
    bus: np.ndarray      # (nb, BUS_COLS)
    gen: np.ndarray      # (ng, GEN_COLS)
    branch: np.ndarray   # (ne, BRANCH_COLS)
    gencost: np.ndarray  # (rows, 4 + terms); may be empty
    diagnostics: ParseDiagnostics = field(default_factory=ParseDiagnostics)

    def __eq__(self, other):
        if not isinstance(other, RawCase):
            return NotImplemented
        return (self.name == other.name
                and self.base_mva == other.base_mva
                and np.array_equal(self.bus, other.bus)
                and np.array_equal(self.gen, other.gen)
                and np.array_equal(self.branch, other.branch)
                and np.array_equal(self.gencost, other.gencost))

    def validate(self):
        if self.base_mva <= 0:
            raise MatpowerError(f"baseMVA must be positive, got {self.base_mva}")
        bus_ids = self.bus[:, 0].astype(np.int64)
        if len(set(bus_ids.tolist())) != len(bus_ids):
            raise MatpowerError("duplicate bus ids in bus table")
        known = set(bus_ids.tolist())
        for tbl, col, what in ((self.gen, 0, "generator"),
                               (self.branch, 0, "branch from-bus"),
                               (self.branch, 1, "branch to-bus")):
            for row in tbl:
                if int(row[col]) not in known:
                    raise MatpowerError(
                        f"dangling bus reference: {what} references bus "
                        f"{int(row[col])} absent from bus table")


KNOWN_TABLES = ("bus", "gen", "branch", "gencost")


class _MatrixReader:
    """Accumulates rows of one bracketed matrix; ';' and newline end a row."""

    def __init__(self, name: str, line_no: int):
        self.name = name
        self.open_line = line_no
        self.rows: list[list[float]] = []
        self.buf: list[float] = []

    def feed(self, text: str, line_no: int) -> str | None:
        """Consume matrix text; returns trailing text after ']' when closed."""
        body, closed, rest = text.partition("]")
        chunks = body.split(";")
        for k, chunk in enumerate(chunks):
            self.buf.extend(_to_float(t, line_no) for t in chunk.split())
            if k < len(chunks) - 1:
                self._end_row()
        if closed:
            self._end_row()
            return rest.lstrip("; \t")
        return None

    def end_line(self):
        self._end_row()

    def _end_row(self):
        if self.buf:
            self.rows.append(self.buf)
            self.buf = []


def _to_float(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MatpowerError(
            f"line {line_no}: non-numeric cell {token!r}") from None


def parse_matpower(text: str) -> RawCase:
    """Parse the body of a MATPOWER case function into a :class:`RawCase`.

    Unknown ``mpc.<name>`` fields are skipped with a diagnostic; malformed
    numeric cells and unterminated matrices raise with a line number.
    """
    name = ""
    base_mva = None
    tables: dict[str, list[list[float]]] = {}
    diag = ParseDiagnostics()

    reader: _MatrixReader | None = None
    skipping_cell = False  # inside an unknown { ... } cell array

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        code = raw_line.split("%", 1)[0].strip()
        while code:
            if skipping_cell:
                _, closed, rest = code.partition("}")
                if closed:
                    skipping_cell = False
                    code = rest.lstrip("; \t")
                    continue
                break
            if reader is not None:
                rest = reader.feed(code, line_no)
                if rest is None:
                    reader.end_line()
                    break
                if reader.name in KNOWN_TABLES:
                    tables[reader.name] = reader.rows
                reader = None
                code = rest
                continue

            if code.startswith("function"):
                name = code.replace("=", " ").split()[-1]
                break
            if not code.startswith("mpc."):
                diag.warn(line_no, f"skipped statement: {code[:60]!r}")
                break
            lhs, eq, rhs = code.partition("=")
            if not eq:
                raise MatpowerError(f"line {line_no}: expected assignment")
            key = lhs.strip()[len("mpc."):]
            rhs = rhs.strip()
            if rhs.startswith("["):
                if key not in KNOWN_TABLES:
                    diag.warn(line_no, f"unknown matrix mpc.{key} skipped")
                reader = _MatrixReader(key, line_no)
                code = rhs[1:]
            elif rhs.startswith("{"):
                diag.warn(line_no, f"unknown cell array mpc.{key} skipped")
                skipping_cell = True
                code = rhs[1:]
            else:
                value = rhs.rstrip(";").strip().strip("'\"")
                if key == "baseMVA":
                    base_mva = _to_float(value, line_no)
                elif key == "version":
                    pass
                else:
                    diag.warn(line_no, f"unknown scalar mpc.{key} skipped")
                break

    if skipping_cell:
        raise MatpowerError("cell array never closed")
    if reader is not None:
        raise MatpowerError(
            f"line {reader.open_line}: matrix mpc.{reader.name} never closed")
    if base_mva is None:
        raise MatpowerError("missing scalar mpc.baseMVA")
    for required in ("bus", "gen", "branch"):
        if required not in tables:
            raise MatpowerError(f"missing matrix mpc.{required}")

    bus = _normalize(tables["bus"], BUS_COLS, BUS_COLS, "bus", diag)
    gen = _normalize(tables["gen"], GEN_COLS, GEN_COLS, "gen", diag)
    # angmin/angmax (columns 12-13) are optional and default to 0
    branch = _normalize(tables["branch"], BRANCH_COLS - 2, BRANCH_COLS,
                        "branch", diag)
    if "gencost" in tables:
        width = max(4, max(len(r) for r in tables["gencost"]))
        gencost = _normalize(tables["gencost"], 4, width, "gencost", diag)
    else:
        diag.ignore("gencost table missing; zero costs assumed")
        gencost = np.zeros((gen.shape[0], 4))
        gencost[:, 0] = 2.0
        gencost[:, 3] = 1.0

    case = RawCase(name=name, base_mva=base_mva, bus=bus, gen=gen,
                   branch=branch, gencost=gencost, diagnostics=diag)
    case.validate()
    return case


def _normalize(rows: list[list[float]], min_cols: int, out_cols: int,
               table: str, diag: ParseDiagnostics) -> np.ndarray:
    out = np.zeros((len(rows), out_cols))
    for k, row in enumerate(rows):
        if len(row) < min_cols:
            raise MatpowerError(
                f"{table} row {k + 1} has {len(row)} columns, "
                f"expected at least {min_cols}")
        if len(row) > out_cols:
            diag.ignore(f"extra {table} columns beyond {out_cols} dropped")
        out[k, :min(len(row), out_cols)] = row[:out_cols]
    return out


def serialize_matpower(case: RawCase) -> str:
    """Writer covering the declared columns; inverse of ``parse_matpower``."""
    def fmt(v: float) -> str:
        return repr(float(v))

    def matrix(name: str, arr: np.ndarray) -> str:
        lines = [f"mpc.{name} = ["]
        lines += ["\t" + "\t".join(fmt(v) for v in row) + ";" for row in arr]
        lines.append("];")
        return "\n".join(lines)

    parts = [f"function mpc = {case.name or 'case'}",
             "mpc.version = '2';",
             f"mpc.baseMVA = {fmt(case.base_mva)};",
             matrix("bus", case.bus),
             matrix("gen", case.gen),
             matrix("branch", case.branch)]
    if case.gencost.size:
        parts.append(matrix("gencost", case.gencost))
    return "\n\n".join(parts) + "\n"


def read_case(path) -> RawCase:
    with open(path, encoding="utf-8") as f:
        return parse_matpower(f.read())


# ---------------------------------------------------------------------------
# preprocessing


def make_basic(raw: RawCase, *, linearize_costs: bool = False) -> Network:
    """Preprocess a raw case into a basic :class:`Network`.

    Out-of-service generators and branches are dropped, buses are renumbered
    consecutively preserving order, quantities are converted to per-unit, one
    load per bus with nonzero demand is materialized, and branch admittance
    blocks are computed.  Non-fatal substitutions (unbounded angle windows,
    missing thermal limits) are recorded in ``raw.diagnostics``.
    """
    raw.validate()
    diag = raw.diagnostics
    base = raw.base_mva
    nb = raw.bus.shape[0]

    bus_ids = raw.bus[:, 0].astype(np.int64)
    pos_of = {int(b): i for i, b in enumerate(bus_ids)}

    gen = raw.gen[raw.gen[:, 7] > 0]
    dropped_gens = raw.gen.shape[0] - gen.shape[0]
    gencost = raw.gencost
    if gencost.shape[0] >= 2 * raw.gen.shape[0] and raw.gen.shape[0] > 0:
        diag.ignore("reactive gencost rows dropped")
        gencost = gencost[:raw.gen.shape[0]]
    if gencost.shape[0] not in (0, raw.gen.shape[0]):
        raise MatpowerError(
            f"gencost has {gencost.shape[0]} rows for {raw.gen.shape[0]} generators")
    gencost = gencost[raw.gen[:, 7] > 0] if gencost.shape[0] else gencost
    branch = raw.branch[raw.branch[:, 10] > 0]
    dropped_branches = raw.branch.shape[0] - branch.shape[0]
    if dropped_gens or dropped_branches:
        diag.ignore(f"removed {dropped_gens} out-of-service generators and "
                    f"{dropped_branches} out-of-service branches")
    if gen.shape[0] == 0:
        raise MatpowerError("no in-service generators")

    # reference bus: first type-3 bus, else the largest-capacity generator's bus
    ref_candidates = np.flatnonzero(raw.bus[:, 1] == 3)
    if ref_candidates.size:
        ref_bus = int(ref_candidates[0])
        if ref_candidates.size > 1:
            diag.ignore(f"{ref_candidates.size} reference buses; kept bus "
                        f"{int(bus_ids[ref_bus])}")
    else:
        ref_bus = pos_of[int(gen[np.argmax(gen[:, 8]), 0])]
        diag.ignore("no type-3 bus; reference set to the largest generator's bus")

    gs = raw.bus[:, 4] / base
    bs = raw.bus[:, 5] / base
    vmax = raw.bus[:, 11].copy()
    vmin = raw.bus[:, 12].copy()
    vnom = raw.bus[:, 9].copy()

    gen_bus = np.array([pos_of[int(b)] for b in gen[:, 0]], dtype=np.int64)
    pgmax = gen[:, 8] / base
    pgmin = gen[:, 9] / base
    qgmax = gen[:, 3] / base
    qgmin = gen[:, 4] / base
    cost = _linear_costs(gen, gencost, base, linearize_costs, diag)

    load_mask = (raw.bus[:, 2] != 0.0) | (raw.bus[:, 3] != 0.0)
    load_bus = np.flatnonzero(load_mask).astype(np.int64)
    pd_ref = raw.bus[load_mask, 2] / base
    qd_ref = raw.bus[load_mask, 3] / base

    ne = branch.shape[0]
    bfrom = np.array([pos_of[int(b)] for b in branch[:, 0]], dtype=np.int64)
    bto = np.array([pos_of[int(b)] for b in branch[:, 1]], dtype=np.int64)
    blocks = np.empty((ne, 8))
    g_series = np.empty(ne)
    b_series = np.empty(ne)
    for e in range(ne):
        r, x, b_c = branch[e, 2], branch[e, 3], branch[e, 4]
        tap = branch[e, 8] if branch[e, 8] != 0.0 else 1.0
        shift = math.radians(branch[e, 9])
        blocks[e] = branch_admittance(r, x, b_c, tap, shift)
        ys = 1.0 / complex(r, x)
        g_series[e], b_series[e] = ys.real, ys.imag

    big_m = max(1.0, float(np.sum(np.abs(pd_ref)) + np.sum(np.abs(qd_ref))))
    smax = branch[:, 5] / base
    unlimited = branch[:, 5] == 0.0
    if unlimited.any():
        smax = np.where(unlimited, big_m, smax)
        diag.ignore(f"{int(unlimited.sum())} branches without rateA; thermal "
                    f"limit set to {big_m:g} p.u.")

    dva_min = np.radians(branch[:, 11])
    dva_max = np.radians(branch[:, 12])
    unbounded = ((branch[:, 11] == 0.0) & (branch[:, 12] == 0.0)) \
        | (np.abs(branch[:, 11]) >= 90.0) | (np.abs(branch[:, 12]) >= 90.0)
    if unbounded.any():
        dva_min = np.where(unbounded, -DEFAULT_DVA, dva_min)
        dva_max = np.where(unbounded, DEFAULT_DVA, dva_max)
        diag.ignore(f"{int(unbounded.sum())} branches with unbounded angle "
                    f"window; set to +-60 deg")

    return Network(
        name=raw.name, base_mva=base, ref_bus=ref_bus,
        gs=gs, bs=bs, vmin=vmin, vmax=vmax, vnom=vnom,
        gen_bus=gen_bus, pgmin=pgmin, pgmax=pgmax, qgmin=qgmin, qgmax=qgmax,
        cost=cost,
        load_bus=load_bus, pd_ref=pd_ref, qd_ref=qd_ref,
        branch_from=bfrom, branch_to=bto,
        g=g_series, b=b_series,
        gff=blocks[:, 0], bff=blocks[:, 1], gft=blocks[:, 2], bft=blocks[:, 3],
        gtf=blocks[:, 4], btf=blocks[:, 5], gtt=blocks[:, 6], btt=blocks[:, 7],
        smax=smax, dva_min=dva_min, dva_max=dva_max,
    )


def _linear_costs(gen: np.ndarray, gencost: np.ndarray, base: float,
                  linearize: bool, diag: ParseDiagnostics) -> np.ndarray:
    ng = gen.shape[0]
    if gencost.shape[0] == 0:
        return np.zeros(ng)
    cost = np.zeros(ng)
    linearized = 0
    for k in range(ng):
        model = int(gencost[k, 0])
        n_terms = int(gencost[k, 3])
        coeffs = gencost[k, 4:4 + n_terms]
        if model == 1:
            raise MatpowerError(
                f"generator {k + 1}: piece-wise linear costs are not supported")
        if model != 2:
            raise MatpowerError(f"generator {k + 1}: unknown cost model {model}")
        # polynomial coefficients are highest-degree first; constants dropped
        c1 = coeffs[-2] if n_terms >= 2 else 0.0
        c2 = coeffs[-3] if n_terms >= 3 else 0.0
        if n_terms >= 4 and np.any(coeffs[:-3] != 0.0):
            raise MatpowerError(
                f"generator {k + 1}: cost polynomial has degree > 2")
        if c2 != 0.0:
            if not linearize:
                raise MatpowerError(
                    f"generator {k + 1} has a quadratic cost term; rerun with "
                    f"cost linearization enabled to approximate it")
            c1 = c1 + c2 * gen[k, 8]  # slope of c2*p^2 + c1*p at p = Pmax/2
            linearized += 1
        cost[k] = c1 * base
    if linearized:
        diag.ignore(f"linearized {linearized} quadratic cost terms at Pmax/2")
    return cost


def network_to_rawcase(net: Network) -> RawCase:
    """Rebuild a RawCase (original units) from a basic network.

    Useful for writing a preprocessed network back out and for checking that
    ``make_basic`` is idempotent.
    """
    nb, ng, ne = net.n_bus, net.n_gen, net.n_branch
    base = net.base_mva
    bus = np.zeros((nb, BUS_COLS))
    bus[:, 0] = np.arange(1, nb + 1)
    bus[:, 1] = 1.0
    bus[np.asarray(net.gen_bus), 1] = 2.0
    bus[net.ref_bus, 1] = 3.0
    for l in range(net.n_load):
        bus[net.load_bus[l], 2] = net.pd_ref[l] * base
        bus[net.load_bus[l], 3] = net.qd_ref[l] * base
    bus[:, 4] = net.gs * base
    bus[:, 5] = net.bs * base
    bus[:, 6] = 1.0
    bus[:, 7] = 1.0
    bus[:, 9] = net.vnom
    bus[:, 10] = 1.0
    bus[:, 11] = net.vmax
    bus[:, 12] = net.vmin

    gen = np.zeros((ng, GEN_COLS))
    gen[:, 0] = np.asarray(net.gen_bus) + 1
    gen[:, 3] = net.qgmax * base
    gen[:, 4] = net.qgmin * base
    gen[:, 5] = 1.0
    gen[:, 6] = base
    gen[:, 7] = 1.0
    gen[:, 8] = net.pgmax * base
    gen[:, 9] = net.pgmin * base

    gencost = np.zeros((ng, 7))
    gencost[:, 0] = 2.0
    gencost[:, 3] = 3.0
    gencost[:, 5] = net.cost / base

    branch = np.zeros((ne, BRANCH_COLS))
    branch[:, 0] = np.asarray(net.branch_from) + 1
    branch[:, 1] = np.asarray(net.branch_to) + 1
    for e in range(ne):
        ys = complex(net.g[e], net.b[e])
        z = 1.0 / ys
        ytt = complex(net.gtt[e], net.btt[e])
        yff = complex(net.gff[e], net.bff[e])
        yft = complex(net.gft[e], net.bft[e])
        b_c = 2.0 * (ytt - ys).imag
        tap = math.sqrt(abs(ytt / yff))
        shift = -cmath.phase(-ys / (tap * yft))
        branch[e, 2], branch[e, 3], branch[e, 4] = z.real, z.imag, b_c
        branch[e, 8] = tap
        branch[e, 9] = math.degrees(shift)
    branch[:, 5] = net.smax * base
    branch[:, 10] = 1.0
    branch[:, 11] = np.degrees(net.dva_min)
    branch[:, 12] = np.degrees(net.dva_max)

    return RawCase(name=net.name, base_mva=base, bus=bus, gen=gen,
                   branch=branch, gencost=gencost)

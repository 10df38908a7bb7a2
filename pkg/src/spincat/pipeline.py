"""End-to-end analysis flows shared by the command line and the test suite.

Each flow takes a RunConfig, resolves the model (registry key or JSON file),
runs the sector eigensolves, and assembles superposition-size measures into
plain-data results that serialize deterministically: floats are written with
repr (shortest round-trip form), dict orders are fixed by construction, and
wall-clock timings live in a separate key so the scientific payload is
byte-reproducible across runs with the same seeds.
"""

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .basis import BudgetExceeded, EmptySector, sector_dimension, \
    format_half_integer
from .correlations import Superposition, correlations_of_state, \
    correlations_of_superposition, staggered_magnetization_stats, \
    sublattice_spin_stats
from .distinguishability import DlmOptions, PartitionResult, \
    discrimination_probability, subset_mask
from . import distinguishability
from . import fisher
from .fisher import DirectionField, FisherOptions, fisher_max, \
    psi_max_states, staggered_field, variance_of_field, maximize_fisher
from .models import ClosedFormSizes, V15Composite, build_mn6_family, \
    chirality_states, polarized_triangle_states, hexagon_ground, registry, \
    compose_v15_correlations
from .operators import SpinModel, build_exchange_hamiltonian, model_from_json
from .solver import SolverOptions, expectation_s_squared, \
    ground_state_in_sector
from .version import VERSION

PHASE_SWEEP_VALUES = (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi)

# multi-spin subsets reported by the single-spin discrimination sweep, on top
# of all single sites: the strongly correlated cores of the large clusters
NAMED_SUBSETS = {
    "fe8": {"core": (4, 5, 6, 7)},
    "mn12_set1": {"pair0": (0, 8), "pair1": (2, 9),
                  "pair2": (4, 10), "pair3": (6, 11)},
    "mn12_set2": {"pair0": (0, 8), "pair1": (2, 9),
                  "pair2": (4, 10), "pair3": (6, 11)},
}


@dataclasses.dataclass
class RunConfig:
    """Everything that determines an analysis run; echoed into every output."""
    model: str
    m1: float = None
    m2: float = None
    delta: float = 0.01
    phi: float = 0.0
    phase_sweep: bool = False
    closed_form: bool = False
    seed: int = 2024
    tol: float = 1e-9
    max_iter: int = 20000
    dense_threshold: int = 4096
    max_sector_dim: float = 5e6
    parallel: int = 1
    extended: bool = False
    out: str = None

    def to_dict(self):
        return dataclasses.asdict(self)

    def solver_options(self, s_hint=None):
        return SolverOptions(tol=self.tol, seed=self.seed,
                             max_iter=self.max_iter,
                             dense_threshold=self.dense_threshold,
                             s_hint=s_hint)


def resolve_model(name):
    """Registry key or model-file path -> (key, model object, ground S).

    ground S is None for file models: the caller must then pass M values
    explicitly.
    """
    reg = registry()
    if name in reg:
        entry = reg[name]
        return entry.key, entry.model, entry.ground_S
    if os.path.exists(name):
        with open(name) as fh:
            model = model_from_json(fh.read())
        return model.cluster.name, model, None
    raise KeyError("unknown model %r: not a registry key (%s) and not a file"
                   % (name, ", ".join(sorted(reg))))


def _check_sector_budget(cluster, two_M, cap):
    dim = sector_dimension(cluster, two_M)
    if dim > cap:
        raise BudgetExceeded("sector M=%s has dimension %d, over the cap %g; "
                             "raise --max-sector-dim to proceed"
                             % (format_half_integer(two_M), dim, cap))
    return dim


def _two_m(value, name):
    two = 2.0 * float(value)
    if abs(two - round(two)) > 1e-9:
        raise ValueError("%s must be integer or half-integer, got %r"
                         % (name, value))
    return int(round(two))


@dataclasses.dataclass
class AnalysisResult:
    """Superposition-size report for one (model, M1, M2) pair."""
    config: RunConfig
    model_key: str
    m1: float
    m2: float
    closed_form: bool = False
    energies: tuple = None              # (E1, E2)
    s_squared: tuple = None             # (<S^2>_1, <S^2>_2)
    overlap_with_collinear: tuple = None
    staggered: dict = None              # mean/variance of S_z^* per subject
    field: list = None                  # optimal directions, N x 3
    d_fi: float = None
    variance: float = None              # max variance of X
    fisher: float = None                # 4 * variance
    fisher_bound: float = None          # 4 (sum_i s_i)^2
    d_fi_components: tuple = None       # component sizes at the same field
    d_rfi: float = None                 # None when divergent
    d_rfi_divergent: bool = False
    d_fi_staggered: float = None
    d_rfi_staggered: float = None
    partition: dict = None
    d_lm: int = None
    variance_split: dict = None
    sublattice_spins: dict = None
    phase_sweep: list = None            # [{"phi":, "d_fi":}, ...]
    notes: list = dataclasses.field(default_factory=list)
    timings: dict = dataclasses.field(default_factory=dict)

    def to_dict(self, include_timings=True):
        doc = {
            "version": VERSION,
            "model": self.model_key,
            "m1": self.m1,
            "m2": self.m2,
            "closed_form": self.closed_form,
            "energies": _jsonable(self.energies),
            "s_squared": _jsonable(self.s_squared),
            "overlap_with_collinear": _jsonable(self.overlap_with_collinear),
            "staggered": _jsonable(self.staggered),
            "d_fi": _jsonable(self.d_fi),
            "variance": _jsonable(self.variance),
            "fisher": _jsonable(self.fisher),
            "fisher_bound": _jsonable(self.fisher_bound),
            "d_fi_components": _jsonable(self.d_fi_components),
            "d_rfi": _jsonable(self.d_rfi),
            "d_rfi_divergent": self.d_rfi_divergent,
            "d_fi_staggered": _jsonable(self.d_fi_staggered),
            "d_rfi_staggered": _jsonable(self.d_rfi_staggered),
            "d_lm": self.d_lm,
            "partition": self.partition,
            "variance_split": _jsonable(self.variance_split),
            "sublattice_spins": _jsonable(self.sublattice_spins),
            "field": _jsonable(self.field),
            "phase_sweep": _jsonable(self.phase_sweep),
            "notes": list(self.notes),
            "config": self.config.to_dict(),
        }
        if include_timings:
            doc["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return doc

    def to_json(self, include_timings=True):
        return json.dumps(self.to_dict(include_timings), indent=2)


def _jsonable(x):
    """Plain-python copy: numpy scalars to float/int, tuples to lists,
    infinities to None (JSON has no inf; divergence carries its own flag)."""
    if x is None or isinstance(x, (bool, int, str)):
        return x
    if isinstance(x, float):
        return None if math.isinf(x) else x
    if isinstance(x, (np.floating, np.integer)):
        return _jsonable(x.item())
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _partition_dict(part):
    return {
        "n_parts": part.n_parts,
        "delta": part.delta,
        "parts": [list(s) for s in part.site_lists()],
        "per_part_probability": [float(p) for p in part.per_part_probability],
        "full_cluster_probability": float(part.full_cluster_probability),
    }


def run_analysis(config):
    """Dispatch on the model kind: closed form, composite, or exchange model."""
    t0 = time.perf_counter()
    key, model, ground_S = resolve_model(config.model)
    if isinstance(model, ClosedFormSizes):
        return _closed_form_analysis(config, key, model, t0)
    if config.closed_form:
        raise ValueError("--closed-form only applies to single-domain systems "
                         "with analytic sizes (mn10, tb)")
    if isinstance(model, V15Composite):
        return _v15_analysis(config, key, model, t0)
    return _standard_analysis(config, key, model, ground_S, t0)


def _closed_form_analysis(config, key, sizes, t0):
    s = sizes.s_total
    res = AnalysisResult(config=config, model_key=key, m1=s, m2=-s,
                         closed_form=True)
    res.d_fi = sizes.d_fi
    res.variance = s * s
    res.fisher = 4.0 * s * s
    res.fisher_bound = 4.0 * s * s
    res.d_fi_components = (0.0, 0.0)
    res.d_rfi = None
    res.d_rfi_divergent = sizes.d_rfi_divergent
    res.d_lm = sizes.d_lm
    res.staggered = {"psi1": {"mean": s, "variance": 0.0},
                     "psi2": {"mean": -s, "variance": 0.0},
                     "superposition": {"mean": 0.0, "variance": s * s}}
    res.notes.append("single-domain collinear limit: the polarized doublet "
                     "M = +/-%s is a pair of product states, every unit is "
                     "individually addressable, and the components carry no "
                     "variance (relative size divergent)"
                     % format_half_integer(int(round(2 * s))))
    if sizes.notes:
        res.notes.append(sizes.notes)
    res.timings["total"] = time.perf_counter() - t0
    return res


def _standard_analysis(config, key, model, ground_S, t0):
    cluster = model.cluster
    if (config.m1 is None or config.m2 is None) and ground_S is None:
        raise ValueError("model %r was loaded from a file: pass --m1/--m2 "
                         "explicitly" % key)
    m1 = ground_S if config.m1 is None else config.m1
    m2 = -ground_S if config.m2 is None else config.m2
    two_M1 = _two_m(m1, "m1")
    two_M2 = _two_m(m2, "m2")
    if two_M1 == two_M2:
        raise EmptySector("M1 = M2 = %s selects a single sector ground state; "
                          "no two-component superposition exists (for a "
                          "singlet ground multiplet there is no polarized "
                          "doublet at all)" % format_half_integer(two_M1))
    res = AnalysisResult(config=config, model_key=key,
                         m1=two_M1 / 2.0, m2=two_M2 / 2.0)
    cap = float(config.max_sector_dim)
    for two_M in (two_M1, two_M2):
        _check_sector_budget(cluster, two_M, cap)

    t = time.perf_counter()
    opts = config.solver_options(s_hint=ground_S)
    psi1 = ground_state_in_sector(model, two_M1, opts)
    psi2 = ground_state_in_sector(model, two_M2, opts)
    res.timings["eigensolve"] = time.perf_counter() - t
    res.energies = (psi1.energy, psi2.energy)
    res.s_squared = (psi1.s_squared, psi2.s_squared)

    t = time.perf_counter()
    data1 = correlations_of_state(psi1)
    data2 = correlations_of_state(psi2)
    sup = Superposition(psi1, psi2, config.phi)
    data_sup = correlations_of_superposition(sup)
    res.timings["correlations"] = time.perf_counter() - t

    t = time.perf_counter()
    best = maximize_fisher(data_sup, FisherOptions(seed=config.seed))
    s_tot = cluster.s_total
    res.field = best.field.n
    res.d_fi = best.d_fi
    res.variance = best.variance
    res.fisher = best.F
    res.fisher_bound = fisher_max(cluster)
    v1 = variance_of_field(data1, best.field)
    v2 = variance_of_field(data2, best.field)
    res.d_fi_components = (v1 / s_tot, v2 / s_tot)
    rfi = fisher.d_rfi(sup, best.field, data_sup=data_sup,
                       data1=data1, data2=data2)
    res.d_rfi_divergent = math.isinf(rfi)
    res.d_rfi = None if res.d_rfi_divergent else rfi
    if res.d_rfi_divergent:
        res.notes.append("components have zero variance along the optimal "
                         "operator: relative size divergent")

    stag = staggered_field(cluster)
    v_st = variance_of_field(data_sup, stag)
    res.d_fi_staggered = v_st / s_tot
    rfi_st = fisher.d_rfi(sup, stag, data_sup=data_sup,
                          data1=data1, data2=data2)
    res.d_rfi_staggered = None if math.isinf(rfi_st) else rfi_st
    gap = abs(res.d_fi - res.d_fi_staggered)
    if gap > 0.01 * max(1.0, res.d_fi):
        res.notes.append("optimal operator departs from the staggered "
                         "magnetization: D_FI=%.4g at the optimum vs %.4g "
                         "at the staggered field; mixed-|M| reference values "
                         "correspond to the staggered evaluation"
                         % (res.d_fi, res.d_fi_staggered))
    res.timings["fisher"] = time.perf_counter() - t

    m1_stats = staggered_magnetization_stats(psi1)
    m2_stats = staggered_magnetization_stats(psi2)
    res.staggered = {
        "psi1": {"mean": m1_stats[0], "variance": m1_stats[1]},
        "psi2": {"mean": m2_stats[0], "variance": m2_stats[1]},
        "superposition": {"mean": float(data_sup.b @ stag.flat),
                          "variance": v_st},
    }

    if config.phase_sweep:
        if abs(two_M1 - two_M2) <= 4:
            sweep = []
            for phi in PHASE_SWEEP_VALUES:
                data_p = correlations_of_superposition(
                    Superposition(psi1, psi2, phi))
                best_p = maximize_fisher(data_p, FisherOptions(seed=config.seed))
                sweep.append({"phi": float(phi), "d_fi": best_p.d_fi,
                              "d_fi_staggered":
                                  variance_of_field(data_p, stag) / s_tot})
            res.phase_sweep = sweep
        else:
            res.notes.append("phase sweep skipped: |M1-M2| > 2 leaves no "
                             "cross terms, the relative phase is unobservable")

    t = time.perf_counter()
    part = distinguishability.d_lm(psi1, psi2, config.delta,
                                   DlmOptions(workers=config.parallel))
    res.partition = _partition_dict(part)
    res.d_lm = part.n_parts
    if part.n_parts == 0:
        res.notes.append("no local-measurement partition reaches the success "
                         "threshold: even the full cluster discriminates the "
                         "components with probability %.4f only"
                         % part.full_cluster_probability)
    res.timings["measurement_partition"] = time.perf_counter() - t

    t = time.perf_counter()
    pm_by_sign = {}
    for pm in psi_max_states(cluster):
        pm_by_sign[pm.two_M] = pm
    overlaps = []
    for psi in (psi1, psi2):
        pm = pm_by_sign.get(psi.two_M)
        overlaps.append(abs(psi.overlap(pm)) if pm is not None else None)
    res.overlap_with_collinear = tuple(overlaps)

    spins = {}
    for which in ("A", "B"):
        mean_j, length, s2 = sublattice_spin_stats(psi1, which)
        spins[which] = {"mean_j": mean_j, "length": length,
                        "s_squared": s2}
    res.sublattice_spins = spins
    res.timings["sublattice"] = time.perf_counter() - t
    res.timings["total"] = time.perf_counter() - t0
    return res


def _v15_analysis(config, key, comp, t0):
    m1 = 0.5 if config.m1 is None else config.m1
    m2 = -0.5 if config.m2 is None else config.m2
    two_M1 = _two_m(m1, "m1")
    two_M2 = _two_m(m2, "m2")
    if two_M1 != -two_M2 or abs(two_M1) not in (1, 3):
        raise ValueError("the composite model supports the chirality pair "
                         "M = +/-1/2 and the polarized pair M = +/-3/2")
    res = AnalysisResult(config=config, model_key=key,
                         m1=two_M1 / 2.0, m2=two_M2 / 2.0)

    t = time.perf_counter()
    if abs(two_M1) == 1:
        tri_pair = chirality_states(comp)
        res.notes.append("components are the two positive-chirality triangle "
                         "doublet members")
    else:
        tri_pair = polarized_triangle_states(comp)
        res.notes.append("components are the fully polarized triangle states")
    tri1, tri2 = tri_pair if two_M1 > 0 else tri_pair[::-1]
    hstate = hexagon_ground(comp, config.solver_options(s_hint=0.0))
    res.timings["eigensolve"] = time.perf_counter() - t

    h_tri = build_exchange_hamiltonian(comp.triangle, tri1.basis).matrix
    e_t1 = float(np.real(np.vdot(tri1.amplitudes, h_tri @ tri1.amplitudes)))
    h_tri2 = build_exchange_hamiltonian(comp.triangle, tri2.basis).matrix
    e_t2 = float(np.real(np.vdot(tri2.amplitudes, h_tri2 @ tri2.amplitudes)))
    res.energies = (e_t1 + 2 * hstate.energy, e_t2 + 2 * hstate.energy)
    res.s_squared = (expectation_s_squared(tri1.basis, tri1.amplitudes),
                     expectation_s_squared(tri2.basis, tri2.amplitudes))
    res.notes.append("hexagon factors are singlet ground states shared by "
                     "both components: energies add, the total spin content "
                     "is the triangle's, and hexagon sites carry no "
                     "distinguishing information")

    t = time.perf_counter()
    data_hex = correlations_of_state(hstate)
    tri_sup = Superposition(tri1, tri2, config.phi)
    data_tri_sup = correlations_of_superposition(tri_sup)
    data1 = compose_v15_correlations(correlations_of_state(tri1), data_hex)
    data2 = compose_v15_correlations(correlations_of_state(tri2), data_hex)
    data_sup = compose_v15_correlations(data_tri_sup, data_hex)
    res.timings["correlations"] = time.perf_counter() - t

    t = time.perf_counter()
    best = maximize_fisher(data_sup, FisherOptions(seed=config.seed))
    s_tot = comp.cluster.s_total
    res.field = best.field.n
    res.d_fi = best.d_fi
    res.variance = best.variance
    res.fisher = best.F
    res.fisher_bound = fisher_max(comp.cluster)
    v1 = variance_of_field(data1, best.field)
    v2 = variance_of_field(data2, best.field)
    res.d_fi_components = (v1 / s_tot, v2 / s_tot)
    rfi = fisher.d_rfi(None, best.field, data_sup=data_sup,
                       data1=data1, data2=data2)
    res.d_rfi_divergent = math.isinf(rfi)
    res.d_rfi = None if res.d_rfi_divergent else rfi
    n = best.field.n
    v_t = variance_of_field(data_tri_sup, DirectionField(n[:3]))
    v_h1 = variance_of_field(data_hex, DirectionField(n[3:9]))
    v_h2 = variance_of_field(data_hex, DirectionField(n[9:15]))
    res.variance_split = {"triangle": v_t, "hexagon1": v_h1,
                          "hexagon2": v_h2}
    res.notes.append("optimal-operator variance decomposes as triangle "
                     "%.6f plus hexagons %.6f and %.6f; the hexagons are "
                     "modeled as uniform antiferromagnetic six-rings "
                     "(reference per-hexagon contribution 4.6641)"
                     % (v_t, v_h1, v_h2))
    res.timings["fisher"] = time.perf_counter() - t

    if config.phase_sweep:
        if abs(two_M1 - two_M2) <= 4:
            sweep = []
            for phi in PHASE_SWEEP_VALUES:
                data_p = compose_v15_correlations(
                    correlations_of_superposition(
                        Superposition(tri1, tri2, phi)), data_hex)
                best_p = maximize_fisher(data_p, FisherOptions(seed=config.seed))
                sweep.append({"phi": float(phi), "d_fi": best_p.d_fi})
            res.phase_sweep = sweep
        else:
            res.notes.append("phase sweep skipped: |M1-M2| > 2 leaves no "
                             "cross terms, the relative phase is unobservable")

    t = time.perf_counter()
    part_tri = distinguishability.d_lm(tri1, tri2, config.delta,
                                       DlmOptions(workers=config.parallel))
    hex_mask = subset_mask(range(3, 15))
    if part_tri.n_parts:
        parts = list(part_tri.parts)
        parts[0] |= hex_mask
        part = PartitionResult(parts=tuple(parts), n_parts=part_tri.n_parts,
                               per_part_probability=part_tri.per_part_probability,
                               delta=part_tri.delta,
                               full_cluster_probability=
                                   part_tri.full_cluster_probability,
                               cluster=comp.cluster)
    else:
        part = PartitionResult(parts=(), n_parts=0, per_part_probability=(),
                               delta=part_tri.delta,
                               full_cluster_probability=
                                   part_tri.full_cluster_probability,
                               cluster=comp.cluster)
        res.notes.append("no local-measurement partition reaches the success "
                         "threshold")
    res.partition = _partition_dict(part)
    res.d_lm = part.n_parts
    res.notes.append("reduced states on any subset match the triangle "
                     "restriction of that subset exactly, so the partition "
                     "search runs on the triangle and the hexagon sites join "
                     "the first part")
    res.timings["measurement_partition"] = time.perf_counter() - t
    res.notes.append("frustrated geometry: no collinear two-sublattice "
                     "reference, staggered-magnetization and sublattice-spin "
                     "reports do not apply")
    res.timings["total"] = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# sector grid


@dataclasses.dataclass
class GridResult:
    config: RunConfig
    model_key: str
    ms: list                   # M values, ascending
    d_fi: np.ndarray           # len(ms) x len(ms)
    d_rfi: np.ndarray          # inf marks divergent cells
    timings: dict


def grid(config):
    """D_FI and D_RFI for every ground-multiplet pair (M1, M2).

    Diagonal cells are zero by convention (a single state is no
    superposition); off-diagonal cells use the relative phase of the config.
    """
    t0 = time.perf_counter()
    key, model, ground_S = resolve_model(config.model)
    if not isinstance(model, SpinModel):
        raise ValueError("the sector grid needs an exchange model, %r is %s"
                         % (key, type(model).__name__))
    if ground_S is None:
        raise ValueError("the sector grid needs the ground multiplet: use a "
                         "registry model")
    cluster = model.cluster
    two_S = int(round(2 * ground_S))
    sectors = list(range(-two_S, two_S + 1, 2))
    cap = float(config.max_sector_dim)
    for two_M in sectors:
        _check_sector_budget(cluster, two_M, cap)

    opts = config.solver_options(s_hint=ground_S)
    states, data = {}, {}
    for two_M in sectors:
        states[two_M] = ground_state_in_sector(model, two_M, opts)
        data[two_M] = correlations_of_state(states[two_M])

    n = len(sectors)
    d_fi = np.zeros((n, n))
    d_rfi = np.zeros((n, n))
    s_tot = cluster.s_total
    fopts = FisherOptions(seed=config.seed)

    def cell(pair):
        a, b = pair
        sup = Superposition(states[sectors[a]], states[sectors[b]], config.phi)
        data_sup = correlations_of_superposition(sup)
        best = maximize_fisher(data_sup, fopts)
        rfi = fisher.d_rfi(sup, best.field, data_sup=data_sup,
                           data1=data[sectors[a]], data2=data[sectors[b]])
        return a, b, best.d_fi, rfi

    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            results = list(pool.map(cell, pairs))
    else:
        results = [cell(p) for p in pairs]
    for a, b, fi_v, rfi_v in results:
        d_fi[a, b] = d_fi[b, a] = fi_v
        d_rfi[a, b] = d_rfi[b, a] = rfi_v
    return GridResult(config=config, model_key=key,
                      ms=[two_M / 2.0 for two_M in sectors],
                      d_fi=d_fi, d_rfi=d_rfi,
                      timings={"total": time.perf_counter() - t0})


def write_grid_csv(result, fh):
    _write_csv_header(fh, result.config)
    fh.write("M1,M2,D_FI,D_RFI\n")
    ms = result.ms
    for i, m1 in enumerate(ms):
        for j, m2 in enumerate(ms):
            fh.write("%s,%s,%s,%s\n" % (_fmt(m1), _fmt(m2),
                                        _fmt(result.d_fi[i, j]),
                                        _fmt(result.d_rfi[i, j])))


# ---------------------------------------------------------------------------
# single-spin discrimination sweep


@dataclasses.dataclass
class PlmSweepResult:
    config: RunConfig
    model_key: str
    rows: list                  # (M, subset_id, probability)
    timings: dict


def plm_sweep(config):
    """Discrimination probability of each single spin (and named cores)
    between the ground states of M and -M, for M from the top of the ground
    multiplet down to the smallest nonzero value."""
    t0 = time.perf_counter()
    key, model, ground_S = resolve_model(config.model)
    if not isinstance(model, SpinModel):
        raise ValueError("the discrimination sweep needs an exchange model, "
                         "%r is %s" % (key, type(model).__name__))
    if ground_S is None:
        raise ValueError("the discrimination sweep needs the ground "
                         "multiplet: use a registry model")
    cluster = model.cluster
    two_S = int(round(2 * ground_S))
    cap = float(config.max_sector_dim)
    named = NAMED_SUBSETS.get(key, {})
    opts = config.solver_options(s_hint=ground_S)
    rows = []
    for two_M in range(two_S, 0, -2):
        _check_sector_budget(cluster, two_M, cap)
        psi_p = ground_state_in_sector(model, two_M, opts)
        psi_m = ground_state_in_sector(model, -two_M, opts)
        m = two_M / 2.0
        for i in range(cluster.n_sites):
            p = discrimination_probability(psi_p, psi_m, (i,))
            rows.append((m, "s%d" % i, p))
        for name in sorted(named):
            p = discrimination_probability(psi_p, psi_m, named[name])
            rows.append((m, name, p))
    return PlmSweepResult(config=config, model_key=key, rows=rows,
                          timings={"total": time.perf_counter() - t0})


def write_plm_csv(result, fh):
    _write_csv_header(fh, result.config)
    fh.write("M,subset_id,P\n")
    for m, subset_id, p in result.rows:
        fh.write("%s,%s,%s\n" % (_fmt(m), subset_id, _fmt(p)))


# ---------------------------------------------------------------------------
# ferrimagnetic-ring scaling study


@dataclasses.dataclass
class RingScalingResult:
    config: RunConfig
    rows: list                  # dicts: s_a, S, d_fi, d_rfi
    fit_d_fi: dict              # slope, intercept, rel_rms
    fit_log_d_rfi: dict         # slope, intercept, rel_rms
    d_rfi_ratios: list
    ideal_bound_d_fi: float
    timings: dict


def ring_scaling(config):
    """Superposition sizes of the alternating ring family against the large
    spin s_A: the Fisher size grows linearly, the relative size
    exponentially, and the idealized two-sublattice limit bounds both."""
    t0 = time.perf_counter()
    rows = []
    cap = float(config.max_sector_dim)
    for two_sa in (2, 3, 4, 5):
        model = build_mn6_family(two_sa / 2.0)
        cluster = model.cluster
        ground_S = 6.0 * (two_sa / 2.0 - 0.5)
        two_S = int(round(2 * ground_S))
        _check_sector_budget(cluster, two_S, cap)
        opts = config.solver_options(s_hint=ground_S)
        psi1 = ground_state_in_sector(model, two_S, opts)
        psi2 = ground_state_in_sector(model, -two_S, opts)
        sup = Superposition(psi1, psi2, config.phi)
        data_sup = correlations_of_superposition(sup)
        best = maximize_fisher(data_sup, FisherOptions(seed=config.seed))
        rfi = fisher.d_rfi(sup, best.field, data_sup=data_sup)
        rows.append({"s_a": two_sa / 2.0, "S": ground_S,
                     "d_fi": best.d_fi, "d_rfi": rfi})

    x = np.array([r["s_a"] for r in rows])
    y_fi = np.array([r["d_fi"] for r in rows])
    y_rfi = np.array([r["d_rfi"] for r in rows])
    lin = np.polyfit(x, y_fi, 1)
    fit_fi = np.polyval(lin, x)
    loglin = np.polyfit(x, np.log(y_rfi), 1)
    fit_rfi = np.exp(np.polyval(loglin, x))
    fit_d_fi = {"slope": float(lin[0]), "intercept": float(lin[1]),
                "rel_rms": _rel_rms(fit_fi, y_fi)}
    fit_log_d_rfi = {"slope": float(loglin[0]),
                     "intercept": float(loglin[1]),
                     "rel_rms": _rel_rms(fit_rfi, y_rfi)}
    ratios = [float(y_rfi[k + 1] / y_rfi[k]) for k in range(len(y_rfi) - 1)]
    ideal = fisher._collective_pair_sizes(build_mn6_family(2.5).cluster)
    return RingScalingResult(config=config, rows=rows, fit_d_fi=fit_d_fi,
                             fit_log_d_rfi=fit_log_d_rfi,
                             d_rfi_ratios=ratios,
                             ideal_bound_d_fi=ideal[0],
                             timings={"total": time.perf_counter() - t0})


def _rel_rms(fit, y):
    return float(np.sqrt(np.mean(((fit - y) / y) ** 2)))


def write_ring_csv(result, fh):
    _write_csv_header(fh, result.config)
    fh.write("# linear D_FI fit: slope=%s intercept=%s rel_rms=%s\n"
             % (_fmt(result.fit_d_fi["slope"]),
                _fmt(result.fit_d_fi["intercept"]),
                _fmt(result.fit_d_fi["rel_rms"])))
    fh.write("# exponential D_RFI fit: log-slope=%s log-intercept=%s "
             "rel_rms=%s\n"
             % (_fmt(result.fit_log_d_rfi["slope"]),
                _fmt(result.fit_log_d_rfi["intercept"]),
                _fmt(result.fit_log_d_rfi["rel_rms"])))
    fh.write("# successive D_RFI ratios: %s\n"
             % " ".join(_fmt(r) for r in result.d_rfi_ratios))
    fh.write("# idealized collinear bound on D_FI: %s\n"
             % _fmt(result.ideal_bound_d_fi))
    fh.write("s_A,S,D_FI,D_RFI\n")
    for r in result.rows:
        fh.write("%s,%s,%s,%s\n" % (_fmt(r["s_a"]), _fmt(r["S"]),
                                    _fmt(r["d_fi"]), _fmt(r["d_rfi"])))


# ---------------------------------------------------------------------------
# summary table


@dataclasses.dataclass(frozen=True)
class TableRow:
    label: str
    model: str
    m1: float
    m2: float
    ref_d_fi: float
    tol_d_fi: float             # relative
    ref_d_rfi: float            # inf marks an expected divergence
    tol_d_rfi: float
    ref_d_lm: int
    policy: str = "max"         # which evaluation the reference quotes
    extended: bool = False


TABLE1_ROWS = (
    TableRow("mn12_set1", "mn12_set1", 10.0, -10.0, 14.4, 0.01, 45.4, 0.03,
             8, extended=True),
    TableRow("mn12_set2", "mn12_set2", 10.0, -10.0, 19.3, 0.01, 113.0, 0.03,
             9, extended=True),
    TableRow("fe8", "fe8", 10.0, -10.0, 16.5, 0.01, 48.7, 0.03, 5),
    TableRow("mn6", "mn6", 12.0, -12.0, 16.0, 0.01, 139.0, 0.03, 7),
    TableRow("fe4_1", "fe4", 5.0, -5.0, 8.603, 0.005, 43.07, 0.005, 3),
    TableRow("fe4_2", "fe4", 5.0, 4.0, 0.366, 0.005, 1.299, 0.005, 1,
             policy="staggered"),
    TableRow("cr7ni", "cr7ni", 0.5, -0.5, 3.986, 0.005, 2.668, 0.005, 2),
    TableRow("v15_1", "v15", 0.5, -0.5, 1.478, 0.005, 1.086, 0.005, 1),
    TableRow("v15_2", "v15", 1.5, -1.5, 1.544, 0.005, 1.241, 0.005, 3),
    TableRow("mn10", "mn10", 23.0, -23.0, 23.0, 1e-12, math.inf, 0.0, 10),
    TableRow("tb", "tb", 6.0, -6.0, 6.0, 1e-12, math.inf, 0.0, 1),
)


@dataclasses.dataclass
class Table1Result:
    config: RunConfig
    rows: list                  # dicts with computed/reference/status cells
    all_ok: bool
    timings: dict


def _within(value, ref, rel_tol):
    if value is None:
        return False
    if math.isinf(ref):
        return math.isinf(value)
    if ref == 0.0:
        return abs(value) <= rel_tol
    return abs(value - ref) <= rel_tol * abs(ref)


def table1(config):
    """Recompute every summary-table row and compare to the reference values.

    The fe4_2 row (mixed |M|) quotes the staggered-field evaluation; the
    optimal-operator value is carried along in the row notes.
    """
    t0 = time.perf_counter()
    out_rows = []
    all_ok = True
    for row in TABLE1_ROWS:
        if row.extended and not config.extended:
            continue
        cfg = dataclasses.replace(config, model=row.model, m1=row.m1,
                                  m2=row.m2, phase_sweep=False,
                                  closed_form=False, extended=False)
        res = run_analysis(cfg)
        if row.policy == "staggered":
            got_fi = res.d_fi_staggered
            got_rfi = res.d_rfi_staggered
        else:
            got_fi = res.d_fi
            got_rfi = math.inf if res.d_rfi_divergent else res.d_rfi
        got_lm = res.d_lm
        ok_fi = _within(got_fi, row.ref_d_fi, row.tol_d_fi)
        ok_rfi = _within(math.inf if got_rfi is None else got_rfi,
                         row.ref_d_rfi, row.tol_d_rfi)
        ok_lm = got_lm == row.ref_d_lm
        ok = ok_fi and ok_rfi and ok_lm
        all_ok = all_ok and ok
        out_rows.append({
            "label": row.label, "m1": row.m1, "m2": row.m2,
            "policy": row.policy,
            "d_fi": got_fi, "ref_d_fi": row.ref_d_fi, "ok_d_fi": ok_fi,
            "d_rfi": got_rfi, "ref_d_rfi": row.ref_d_rfi, "ok_d_rfi": ok_rfi,
            "d_lm": got_lm, "ref_d_lm": row.ref_d_lm, "ok_d_lm": ok_lm,
            "ok": ok, "notes": list(res.notes),
        })
    return Table1Result(config=config, rows=out_rows, all_ok=all_ok,
                        timings={"total": time.perf_counter() - t0})


def render_table1(result):
    lines = []
    head = "%-10s %6s %6s | %9s %9s %2s | %9s %9s %2s | %4s %4s %2s | %s" % (
        "system", "M1", "M2", "D_FI", "ref", "", "D_RFI", "ref", "",
        "D_LM", "ref", "", "status")
    lines.append(head)
    lines.append("-" * len(head))
    for r in result.rows:
        lines.append(
            "%-10s %6s %6s | %9s %9s %2s | %9s %9s %2s | %4s %4s %2s | %s" % (
                r["label"], _fmt_m(r["m1"]), _fmt_m(r["m2"]),
                _fmt_cell(r["d_fi"]), _fmt_cell(r["ref_d_fi"]),
                _tick(r["ok_d_fi"]),
                _fmt_cell(r["d_rfi"]), _fmt_cell(r["ref_d_rfi"]),
                _tick(r["ok_d_rfi"]),
                r["d_lm"], r["ref_d_lm"], _tick(r["ok_d_lm"]),
                "ok" if r["ok"] else "MISMATCH"))
    lines.append("")
    lines.append("all rows within tolerance" if result.all_ok
                 else "some rows outside tolerance")
    return "\n".join(lines)


def write_table1_csv(result, fh):
    _write_csv_header(fh, result.config)
    fh.write("system,M1,M2,policy,D_FI,D_FI_ref,D_FI_ok,"
             "D_RFI,D_RFI_ref,D_RFI_ok,D_LM,D_LM_ref,D_LM_ok,ok\n")
    for r in result.rows:
        fh.write("%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s,%s\n" % (
            r["label"], _fmt(r["m1"]), _fmt(r["m2"]), r["policy"],
            _fmt(r["d_fi"]), _fmt(r["ref_d_fi"]), r["ok_d_fi"],
            _fmt(r["d_rfi"]), _fmt(r["ref_d_rfi"]), r["ok_d_rfi"],
            r["d_lm"], r["ref_d_lm"], r["ok_d_lm"], r["ok"]))


# ---------------------------------------------------------------------------
# shared rendering helpers


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _fmt_m(m):
    return format_half_integer(int(round(2 * m)))


def _fmt_cell(x):
    if x is None or (isinstance(x, float) and math.isinf(x)):
        return "inf"
    return "%.4g" % x


def _tick(ok):
    return "" if ok else "!"


def _write_csv_header(fh, config):
    fh.write("# spincat %s\n" % VERSION)
    fh.write("# config: %s\n"
             % json.dumps(config.to_dict(), sort_keys=True))


def render_analysis(res):
    """Human-readable analysis summary."""
    lines = []
    lines.append("model %s   superposition of M1=%s and M2=%s   (spincat %s)"
                 % (res.model_key, _fmt_m(res.m1), _fmt_m(res.m2), VERSION))
    if res.closed_form:
        lines.append("closed form: D_FI=%s  D_LM=%d  D_RFI divergent"
                     % (_fmt_cell(res.d_fi), res.d_lm))
    else:
        if res.energies is not None:
            lines.append("component energies: %s, %s"
                         % tuple("%.6f" % e for e in res.energies))
        if res.s_squared is not None:
            lines.append("component <S^2>: %s, %s"
                         % tuple("%.4f" % s for s in res.s_squared))
        if res.overlap_with_collinear is not None:
            lines.append("overlap with collinear product states: %s"
                         % ", ".join("n/a" if o is None else "%.4f" % o
                                     for o in res.overlap_with_collinear))
        if res.staggered is not None:
            st = res.staggered
            lines.append("staggered magnetization (mean, variance): "
                         "psi1 (%.4f, %.4f)  psi2 (%.4f, %.4f)  "
                         "superposition (%.4f, %.4f)"
                         % (st["psi1"]["mean"], st["psi1"]["variance"],
                            st["psi2"]["mean"], st["psi2"]["variance"],
                            st["superposition"]["mean"],
                            st["superposition"]["variance"]))
        lines.append("D_FI  = %.6g   (components at the same operator: "
                     "%.6g, %.6g; bound %s)"
                     % (res.d_fi, res.d_fi_components[0],
                        res.d_fi_components[1],
                        _fmt_cell(math.sqrt(res.fisher_bound) / 2.0)))
        lines.append("D_RFI = %s" % ("divergent" if res.d_rfi_divergent
                                     else "%.6g" % res.d_rfi))
        if res.d_fi_staggered is not None:
            lines.append("staggered-field evaluation: D_FI=%.6g  D_RFI=%s"
                         % (res.d_fi_staggered,
                            "divergent" if res.d_rfi_staggered is None
                            else "%.6g" % res.d_rfi_staggered))
        lines.append("D_LM  = %d" % res.d_lm)
        if res.partition and res.partition["parts"]:
            lines.append("partition: %s   (per-part probabilities %s)"
                         % (" | ".join(str(tuple(p))
                                       for p in res.partition["parts"]),
                            ", ".join("%.4f" % p for p in
                                      res.partition["per_part_probability"])))
        if res.sublattice_spins:
            sp = res.sublattice_spins
            lines.append("sublattice spin content: <j_A>=%.4f  <j_B>=%.4f"
                         % (sp["A"]["mean_j"], sp["B"]["mean_j"]))
        if res.phase_sweep:
            lines.append("phase sweep: "
                         + "  ".join("phi=%.4f D_FI=%.6g"
                                     % (e["phi"], e["d_fi"])
                                     for e in res.phase_sweep))
    for note in res.notes:
        lines.append("note: %s" % note)
    return "\n".join(lines)

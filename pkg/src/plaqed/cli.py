"""Sweep driver and command-line interface.

Subcommands: sweep, figure, dump-cluster, coverings, vbs-check.
Configuration comes from a YAML file plus flag overrides (flags win).
Sweeps emit a versioned CSV (one row per parameter point / sector /
observable, 12 significant digits), per-bond correlation-map CSVs, and a
JSON run manifest; per-(point, sector) checkpoints make interrupted sweeps
resumable.  Exit codes: 0 success, 1 partial (some points failed),
2 invalid spec.
"""

import argparse
import csv
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__, kernels
from .coverings import check_counting_identities, enumerate_valid_coverings
from .eigensolver import (ConvergenceError, label_point_group,
                          low_level_count, lowest_eigenpairs)
from .hamiltonian import ModelParams, build_operator
from .hilbert import build_momentum_basis
from .lattice import allowed_momenta, build_cluster, cluster_by_name
from .observables import (dimer_correlations, energy_differences,
                          fss_extrapolate, structure_factor)
from .vbs import (SS_OFFSETS, build_product_state, build_ss_state,
                  extra_axial_patterns, gram_matrix, ground_space_overlap,
                  pattern_diagram, ss_pattern)

CSV_SCHEMA = "plaqed.sweep.v1"
MANIFEST_SCHEMA = "plaqed.manifest.v1"
MAP_SCHEMA = "plaqed.map.v1"

OBSERVABLE_NAMES = ("energies", "gaps", "structure_factor",
                    "dimer_correlations", "fss", "coverings", "vbs_overlap")


class SpecError(ValueError):
    """Invalid sweep specification (CLI exit code 2)."""


def _fmt(x):
    return f"{x:.12g}"


@dataclass
class SweepSpec:
    """Validated sweep description."""

    clusters: list                    # cluster names or spanning-vector pairs
    gamma: list
    delta: list
    sectors: object = "all"           # "all" or list of momentum tokens
    levels: int = 1
    observables: tuple = ("energies",)
    structure_factor_q: tuple = ("pi,0",)
    dimer_class: str = "second"
    target_sector: str = "0,0"
    seed: int = 0
    tol: float = 1e-10
    output: str = "plaqed-run"
    workers: int = 1
    resume: bool = True


def parse_grid(value, name):
    """Grid from a scalar, list, {start, stop, step} mapping, or
    "start:stop:step" string.  Must be finite and monotone."""
    if isinstance(value, str) and ":" in value:
        parts = value.split(":")
        if len(parts) != 3:
            raise SpecError(f"{name}: grid string must be start:stop:step")
        value = {"start": float(parts[0]), "stop": float(parts[1]),
                 "step": float(parts[2])}
    if isinstance(value, dict):
        try:
            start, stop, step = (float(value[k]) for k in ("start", "stop", "step"))
        except KeyError as exc:
            raise SpecError(f"{name}: grid mapping needs start/stop/step") from exc
        if step <= 0 or stop < start:
            raise SpecError(f"{name}: grid must be finite and increasing")
        n = int(round((stop - start) / step))
        grid = [start + i * step for i in range(n + 1)]
        if grid[-1] > stop + 1e-12:
            grid.pop()
        return [round(g, 12) for g in grid]
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, str):
        return [float(tok) for tok in value.split(",") if tok.strip()]
    grid = [float(v) for v in value]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise SpecError(f"{name}: grid must be strictly increasing")
    if not grid:
        raise SpecError(f"{name}: empty grid")
    return grid


_PI_TOKEN = re.compile(r"^(-?)(?:(\d+)?pi(?:/(\d+))?|0)$")


def _parse_k_component(tok):
    tok = tok.strip().replace(" ", "")
    m = _PI_TOKEN.match(tok)
    if not m:
        try:
            return float(tok)
        except ValueError:
            raise SpecError(f"cannot parse momentum component {tok!r}") from None
    if tok in ("0", "-0"):
        return 0.0
    sign = -1.0 if m.group(1) == "-" else 1.0
    num = int(m.group(2)) if m.group(2) else 1
    den = int(m.group(3)) if m.group(3) else 1
    return sign * num * math.pi / den


def parse_momentum(cluster, token):
    """Momentum from a token like "0,0", "pi,0", "pi,pi/2"."""
    parts = str(token).split(",")
    if len(parts) != 2:
        raise SpecError(f"momentum token {token!r} must have two components")
    kx, ky = (_parse_k_component(p) for p in parts)
    try:
        return cluster.momentum_from_k(kx, ky)
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def _cluster_from_entry(entry):
    if isinstance(entry, str) and entry.isdigit():
        return cluster_by_name(entry)
    if isinstance(entry, str):
        nums = [int(tok) for tok in re.findall(r"-?\d+", entry)]
        if len(nums) != 4:
            raise SpecError(f"cannot parse cluster {entry!r}")
        return build_cluster(((nums[0], nums[1]), (nums[2], nums[3])))
    return build_cluster(tuple(tuple(int(c) for c in v) for v in entry))


def load_spec(config_path=None, overrides=None):
    """SweepSpec from a YAML config file with flag overrides (flags win)."""
    data = {}
    if config_path:
        with open(config_path) as fh:
            data = yaml.safe_load(fh) or {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    data.update(overrides)
    clusters = data.get("cluster", "16")
    if isinstance(clusters, (str, int)):
        clusters = [str(clusters)]
    elif isinstance(clusters, (list, tuple)) and clusters \
            and isinstance(clusters[0], (list, tuple)):
        clusters = [clusters]
    else:
        clusters = [str(c) for c in clusters]
    observables = data.get("observables", ["energies"])
    if isinstance(observables, str):
        observables = [o.strip() for o in observables.split(",") if o.strip()]
    for o in observables:
        if o not in OBSERVABLE_NAMES:
            raise SpecError(f"unknown observable {o!r}; known: {OBSERVABLE_NAMES}")
    if "fss" in observables and len(clusters) < 2:
        raise SpecError("fss observable needs at least two cluster sizes")
    sectors = data.get("sectors", "all")
    if isinstance(sectors, str) and sectors != "all":
        sectors = [s.strip() for s in sectors.split(";") if s.strip()]
    q_list = data.get("structure_factor_q", ["pi,0"])
    if isinstance(q_list, str):
        q_list = [s.strip() for s in q_list.split(";") if s.strip()]
    dimer_class = data.get("dimer_class", "second")
    if dimer_class not in ("first", "second"):
        raise SpecError("dimer_class must be 'first' or 'second'")
    levels = int(data.get("levels", 1))
    if levels < 1:
        raise SpecError("levels must be >= 1")
    tol = float(data.get("tol", 1e-10))
    if tol <= 0:
        raise SpecError("tol must be positive")
    workers = int(data.get("workers",
                           os.environ.get("PLAQED_WORKERS", 1)))
    return SweepSpec(
        clusters=clusters,
        gamma=parse_grid(data.get("gamma", 0.0), "gamma"),
        delta=parse_grid(data.get("delta", 0.0), "delta"),
        sectors=sectors,
        levels=levels,
        observables=tuple(observables),
        structure_factor_q=tuple(q_list),
        dimer_class=dimer_class,
        target_sector=str(data.get("target_sector", "0,0")),
        seed=int(data.get("seed", 0)),
        tol=tol,
        output=str(data.get("output", "plaqed-run")),
        workers=max(1, workers),
        resume=bool(data.get("resume", True)),
    )


# ---------------------------------------------------------------------------
# sweep engine


def _resolve_sectors(cluster, sectors):
    if sectors == "all":
        return list(allowed_momenta(cluster))
    return [parse_momentum(cluster, tok) for tok in sectors]


def _choose_reference_index(op, basis, result):
    """Index of the lowest state at the target momentum with the highest
    symmetry (A1 preferred), following the sweep's state convention."""
    for i in range(len(result.eigenvalues)):
        try:
            lab = label_point_group(result.eigenvectors[:, i], basis)
        except Exception:
            return 0
        if lab.name == "A1" or not lab.characters:
            return i
    return 0


def _sector_job(job):
    """Solve all parameter points of one (cluster, sz, momentum) sector.

    Runs inside a worker process; returns {point_index: payload} where the
    payload carries CSV rows plus the sector minima needed by post-passes.
    """
    cluster = _cluster_from_entry(job["cluster"])
    momentum = cluster.momentum(*job["momentum"])
    sz = job["sz"]
    basis = build_momentum_basis(cluster, sz, momentum)
    ck = job["cluster_label"]
    out = {}
    for pi, gamma, delta in job["points"]:
        rows = []
        payload = {"rows": rows, "failed": False, "minima": None}
        params = ModelParams(j=1.0, gamma=gamma, delta=delta)
        op = build_operator(cluster, params)
        try:
            res = lowest_eigenpairs(op, basis, job["m"], job["tol"],
                                    seed=job["seed"])
        except ConvergenceError as exc:
            payload["failed"] = True
            rows.append({"cluster": ck, "gamma": gamma, "delta": delta,
                         "sz": sz, "k": momentum.label,
                         "observable": "solver_failure", "qualifier": "",
                         "value": float("nan"), "note": str(exc)})
            out[pi] = payload
            continue
        payload["minima"] = float(res.eigenvalues[0])
        if job["emit_energies"]:
            for i, e in enumerate(res.eigenvalues):
                rows.append({"cluster": ck, "gamma": gamma, "delta": delta,
                             "sz": sz, "k": momentum.label,
                             "observable": "energy", "qualifier": str(i),
                             "value": float(e)})
        if job["is_target"] and sz == 0:
            ref = _choose_reference_index(op, basis, res)
            state = res.eigenvectors[:, ref]
            for tok in job["q_tokens"]:
                try:
                    q = parse_momentum(cluster, tok)
                except SpecError:
                    continue  # momentum not present on this cluster
                val = structure_factor(state, basis, q)
                rows.append({"cluster": ck, "gamma": gamma, "delta": delta,
                             "sz": sz, "k": momentum.label,
                             "observable": "structure_factor",
                             "qualifier": q.label, "value": val})
            if job["dimer_class"]:
                rep = dimer_correlations(state, basis, job["dimer_class"])
                rows.append({"cluster": ck, "gamma": gamma, "delta": delta,
                             "sz": sz, "k": momentum.label,
                             "observable": "dimer_reference",
                             "qualifier": f"{rep.r1}", "value": rep.reference_value})
                if rep.farthest is not None:
                    rows.append({"cluster": ck, "gamma": gamma, "delta": delta,
                                 "sz": sz, "k": momentum.label,
                                 "observable": "dimer_corr_rm",
                                 "qualifier": f"r={rep.farthest.r},r2={rep.farthest.r2}",
                                 "value": rep.farthest.value})
                payload["map"] = [
                    {"x1": e.r[0], "y1": e.r[1],
                     "x2": e.r[0] + e.r2[0], "y2": e.r[1] + e.r2[1],
                     "value": e.value, "distance": e.distance,
                     "overlaps_reference": int(e.overlaps_reference)}
                    for e in rep.entries]
        out[pi] = payload
    basis._matrix_cache.clear()
    return job["key"], out


def _vbs_job(job):
    """Per-point job: ground multiplicity over all momenta (adaptively
    resolved, no missing degenerate copies) and overlap of the zero-energy
    space with the four dimer-product states."""
    cluster = _cluster_from_entry(job["cluster"])
    ck = job["cluster_label"]
    states = [build_ss_state(cluster, off) for off in SS_OFFSETS]
    out = {}
    for pi, gamma, delta in job["points"]:
        rows = []
        params = ModelParams(j=1.0, gamma=gamma, delta=delta)
        op = build_operator(cluster, params)
        first = {}
        failed = False
        for mom in allowed_momenta(cluster):
            basis = build_momentum_basis(cluster, 0, mom)
            if basis.dim == 0:
                continue
            try:
                first[mom] = (basis, lowest_eigenpairs(
                    op, basis, max(2, job["m"]), job["tol"], seed=job["seed"]))
            except ConvergenceError:
                failed = True
            basis._matrix_cache.clear()
        if not first:
            out[pi] = {"rows": [], "failed": True, "minima": None}
            continue
        e0 = min(float(r.eigenvalues[0]) for _, r in first.values())
        thr = e0 + 1e-8 * max(1.0, abs(e0))
        mult = 0
        spectra = []
        for basis, res in first.values():
            if np.all(res.eigenvalues < thr) and len(res.eigenvalues) < basis.dim:
                try:
                    count, res = low_level_count(op, basis, thr, job["tol"],
                                                 seed=job["seed"])
                except ConvergenceError:
                    failed = True
                    count = int(np.sum(res.eigenvalues < thr))
                basis._matrix_cache.clear()
            else:
                count = int(np.sum(res.eigenvalues < thr))
            mult += count
            spectra.append(res)
        ov = ground_space_overlap(spectra, states, zero_tol=max(1e-8, 10 * job["tol"]))
        rows.append({"cluster": ck, "gamma": gamma, "delta": delta, "sz": 0,
                     "k": "all", "observable": "ground_multiplicity",
                     "qualifier": "", "value": float(mult)})
        rows.append({"cluster": ck, "gamma": gamma, "delta": delta, "sz": 0,
                     "k": "all", "observable": "vbs_overlap",
                     "qualifier": f"zero_dim={ov.ground_dim}", "value": ov.overlap})
        rows.append({"cluster": ck, "gamma": gamma, "delta": delta, "sz": 0,
                     "k": "all", "observable": "vbs_overlap_reverse",
                     "qualifier": f"rank={ov.state_rank}",
                     "value": ov.overlap_states_onto_computed})
        out[pi] = {"rows": rows, "failed": failed, "minima": None}
    return job["key"], out


def _checkpoint_path(outdir, key):
    return Path(outdir) / "checkpoints" / f"{key}.json"


def _run_jobs(jobs, outdir, workers, resume):
    """Execute sector jobs (optionally in a process pool) with per-job
    checkpointing; returns {job_key: {point: payload}}."""
    results = {}
    pending = []
    for job in jobs:
        cp = _checkpoint_path(outdir, job["key"])
        if resume and cp.exists():
            with open(cp) as fh:
                stored = json.load(fh)
            results[job["key"]] = {int(k): v for k, v in stored.items()}
        else:
            pending.append(job)
    if workers > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, payloads in pool.map(_run_one_job, pending):
                results[key] = payloads
    else:
        for job in pending:
            key, payloads = _run_one_job(job)
            results[key] = payloads
    for job in pending:
        cp = _checkpoint_path(outdir, job["key"])
        cp.parent.mkdir(parents=True, exist_ok=True)
        with open(cp, "w") as fh:
            json.dump(results[job["key"]], fh)
    return results


def _run_one_job(job):
    if job["type"] == "vbs":
        return _vbs_job(job)
    return _sector_job(job)


def run_sweep(spec):
    """Execute a sweep; writes CSV, correlation maps, manifest, checkpoints.

    Returns (exit_code, outdir).
    """
    outdir = Path(spec.output)
    outdir.mkdir(parents=True, exist_ok=True)
    points = [(pi, g, d) for pi, (g, d) in enumerate(
        (g, d) for g in spec.gamma for d in spec.delta)]

    jobs = []
    cluster_objs = {}
    for centry in spec.clusters:
        cluster = _cluster_from_entry(centry)
        label = str(centry) if isinstance(centry, str) else cluster.key
        cluster_objs[label] = cluster
        sectors = _resolve_sectors(cluster, spec.sectors)
        target = parse_momentum(cluster, spec.target_sector)
        want_energy = "energies" in spec.observables or "gaps" in spec.observables
        want_sf = "structure_factor" in spec.observables or "fss" in spec.observables
        want_dd = "dimer_correlations" in spec.observables
        sector_set = list(sectors)
        if (want_sf or want_dd) and target not in sector_set:
            sector_set.append(target)
        for mom in sector_set:
            is_target = mom == target
            emit_energy = want_energy and mom in sectors
            if not (emit_energy or (is_target and (want_sf or want_dd))):
                continue
            jobs.append({
                "type": "sector", "cluster": centry, "cluster_label": label,
                "sz": 0, "momentum": (mom.vx, mom.vy), "points": points,
                "m": spec.levels, "tol": spec.tol, "seed": spec.seed,
                "emit_energies": emit_energy,
                "is_target": is_target,
                "q_tokens": spec.structure_factor_q if want_sf else (),
                "dimer_class": spec.dimer_class if want_dd else None,
                "key": f"{label}_sz0_k{mom.vx}_{mom.vy}",
            })
        if "gaps" in spec.observables:
            for mom in allowed_momenta(cluster):
                jobs.append({
                    "type": "sector", "cluster": centry, "cluster_label": label,
                    "sz": 1, "momentum": (mom.vx, mom.vy), "points": points,
                    "m": 1, "tol": spec.tol, "seed": spec.seed,
                    "emit_energies": False, "is_target": False,
                    "q_tokens": (), "dimer_class": None,
                    "key": f"{label}_sz1_k{mom.vx}_{mom.vy}",
                })
        if "vbs_overlap" in spec.observables:
            jobs.append({
                "type": "vbs", "cluster": centry, "cluster_label": label,
                "points": points, "m": spec.levels, "tol": spec.tol,
                "seed": spec.seed, "key": f"{label}_vbsoverlap",
            })

    results = _run_jobs(jobs, outdir, spec.workers, spec.resume)

    rows = []
    failures = []
    # per-point post-passes: energy differences, spin gap, fss
    for label, cluster in cluster_objs.items():
        if "coverings" in spec.observables:
            covs = enumerate_valid_coverings(cluster)
            rows.append({"cluster": label, "gamma": "", "delta": "", "sz": "",
                         "k": "", "observable": "covering_count",
                         "qualifier": "", "value": float(len(covs))})
    for pi, gamma, delta in points:
        minima = {}
        for job in jobs:
            payload = results.get(job["key"], {}).get(pi)
            if payload is None:
                continue
            rows.extend(payload["rows"])
            if payload.get("failed"):
                failures.append({"point": (gamma, delta), "job": job["key"]})
            if payload.get("minima") is not None:
                minima[(job["cluster_label"], job["sz"],
                        tuple(job["momentum"]))] = payload["minima"]
            if payload.get("map"):
                _write_map(outdir, job, gamma, delta, payload["map"])
        for label in cluster_objs:
            sz0 = [v for (cl, sz, _), v in minima.items() if cl == label and sz == 0]
            sz1 = [v for (cl, sz, _), v in minima.items() if cl == label and sz == 1]
            if sz0 and "energies" in spec.observables:
                e0 = min(sz0)
                rows.append({"cluster": label, "gamma": gamma, "delta": delta,
                             "sz": 0, "k": "all", "observable": "ground_energy",
                             "qualifier": "", "value": e0})
            if sz0 and sz1 and "gaps" in spec.observables:
                rows.append({"cluster": label, "gamma": gamma, "delta": delta,
                             "sz": "", "k": "all", "observable": "spin_gap",
                             "qualifier": "", "value": min(sz1) - min(sz0)})
        if "fss" in spec.observables:
            for tok in spec.structure_factor_q:
                pts = []
                for label, cluster in cluster_objs.items():
                    val = _find_sf_row(rows, label, gamma, delta, cluster, tok)
                    if val is not None:
                        pts.append((cluster.n_sites, val))
                if len(pts) >= 2:
                    fit = fss_extrapolate(pts)
                    rows.append({"cluster": "+".join(cluster_objs), "gamma": gamma,
                                 "delta": delta, "sz": 0, "k": "all",
                                 "observable": "fss_m0_squared", "qualifier": tok,
                                 "value": fit.m0_squared})

    _write_rows(outdir / "sweep.csv", rows)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "clusters": {label: {"n_sites": c.n_sites,
                             "spanning_vectors": [list(v) for v in c.spanning_vectors]}
                     for label, c in cluster_objs.items()},
        "gamma": spec.gamma, "delta": spec.delta,
        "sectors": spec.sectors if spec.sectors == "all" else list(spec.sectors),
        "levels": spec.levels, "observables": list(spec.observables),
        "seed": spec.seed, "tol": spec.tol, "workers": spec.workers,
        "package_version": __version__, "kernel_backend": kernels.backend(),
        "numpy_version": np.__version__,
        "n_jobs": len(jobs), "n_failures": len(failures),
        "failures": failures,
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    return (1 if failures else 0), outdir


def _find_sf_row(rows, label, gamma, delta, cluster, tok):
    try:
        q = parse_momentum(cluster, tok)
    except SpecError:
        return None
    for r in rows:
        if (r["cluster"] == label and r["gamma"] == gamma and r["delta"] == delta
                and r["observable"] == "structure_factor"
                and r["qualifier"] == q.label):
            return r["value"]
    return None


def _write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={CSV_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["cluster", "gamma", "delta", "sz", "k",
                         "observable", "qualifier", "value"])
        for r in rows:
            writer.writerow([
                r["cluster"],
                _fmt(r["gamma"]) if r["gamma"] != "" else "",
                _fmt(r["delta"]) if r["delta"] != "" else "",
                r["sz"], r["k"], r["observable"], r["qualifier"],
                _fmt(r["value"])])


def _write_map(outdir, job, gamma, delta, entries):
    mapdir = Path(outdir) / "maps"
    mapdir.mkdir(parents=True, exist_ok=True)
    name = (f"dimer_{job['dimer_class']}_{job['cluster_label']}"
            f"_g{gamma:g}_d{delta:g}.csv")
    with open(mapdir / name, "w", newline="") as fh:
        fh.write(f"# schema={MAP_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["x1", "y1", "x2", "y2", "value", "distance",
                         "overlaps_reference"])
        for e in entries:
            writer.writerow([e["x1"], e["y1"], e["x2"], e["y2"],
                             _fmt(e["value"]), _fmt(e["distance"]),
                             e["overlaps_reference"]])


# ---------------------------------------------------------------------------
# figure recipes


def _recipe_specs(name, extended, output, seed, workers):
    """SweepSpec(s) reproducing the data series of a named figure."""
    grids = {
        "fig4": dict(clusters=["20"] + (["32"] if extended else []),
                     gamma=[1.0], delta=parse_grid("0.5:1.0:0.05", "delta"),
                     sectors=["0,0", "pi,0", "0,pi", "pi,pi"], levels=2,
                     observables=("energies", "gaps")),
        "fig5": dict(clusters=["20"] + (["32"] if extended else []),
                     gamma=[1.0], delta=parse_grid("0.5:1.0:0.05", "delta"),
                     sectors=["0,0"], levels=1,
                     observables=("energies", "structure_factor",
                                  "dimer_correlations")
                     + (("fss",) if extended else ()),
                     structure_factor_q=("pi,0",), dimer_class="second"),
        "fig6": dict(clusters=["32"] if extended else ["20"],
                     gamma=[0.0], delta=[0.15], sectors=["0,0"], levels=1,
                     observables=("energies", "dimer_correlations"),
                     dimer_class="first"),
        "fig7": dict(clusters=["20"] + (["32"] if extended else []),
                     gamma=[0.0], delta=parse_grid("0.0:0.5:0.05", "delta"),
                     sectors=["0,0", "pi,0", "0,pi", "pi,pi"], levels=2,
                     observables=("energies", "gaps")),
        "fig8": dict(clusters=["16", "20"] + (["32"] if extended else []),
                     gamma=[0.0], delta=parse_grid("0.0:0.5:0.05", "delta"),
                     sectors=["0,0"], levels=1,
                     observables=("energies", "structure_factor"),
                     structure_factor_q=("pi,pi", "pi,0", "pi/2,pi/2", "pi,pi/2")),
        "fig9": dict(clusters=["32"] if extended else ["20"],
                     gamma=[0.0], delta=[0.375, 0.45], sectors=["0,0"], levels=1,
                     observables=("energies", "dimer_correlations"),
                     dimer_class="second"),
    }
    if name not in grids:
        raise SpecError(f"unknown figure recipe {name!r}")
    kw = grids[name]
    return SweepSpec(output=output, seed=seed, workers=workers, **kw)


def _figure_fig3_check(outdir, seed, tol):
    """Check the 16-site extra ground states: the two axial-winding product
    states are zero-energy and the six covering products all lie inside the
    computed zero space (which on this cluster carries one additional
    non-product singlet; see README)."""
    cluster = cluster_by_name("16")
    op = build_operator(cluster, ModelParams(j=1.0, gamma=0.5, delta=1.0))
    spectra = []
    for mom in allowed_momenta(cluster):
        basis = build_momentum_basis(cluster, 0, mom)
        _, res = low_level_count(op, basis, 1e-9, tol, seed=seed)
        spectra.append(res)
    patterns = [ss_pattern(cluster, off) for off in SS_OFFSETS] \
        + extra_axial_patterns(cluster)
    states = [build_product_state(cluster, p) for p in patterns]
    ov = ground_space_overlap(spectra, states, zero_tol=1e-8)
    lines = [f"zero-energy multiplicity: {ov.ground_dim}",
             f"covering product states:  {ov.state_rank} (4 diagonal + 2 axial)",
             f"overlap products->computed: {ov.overlap_states_onto_computed:.12g}"
             " (1 = every covering product is a zero mode)",
             f"overlap computed->products: {ov.overlap:.12g}",
             "zero states per sector: " + ", ".join(
                 f"{mom.label}:{n}" for (sz, mom), n in
                 sorted(ov.sector_multiplicity.items(), key=lambda kv: str(kv[0]))),
             ""]
    for i, p in enumerate(patterns[4:], start=1):
        lines.append(f"extra axial pattern {i}:")
        lines.append(pattern_diagram(cluster, p))
        lines.append("")
    text = "\n".join(lines)
    (Path(outdir) / "fig3_check.txt").write_text(text)
    return text


def _figure_appendix_count(outdir, extended):
    names = ["16", "20"] + (["32"] if extended else [])
    lines = []
    for name in names:
        cluster = cluster_by_name(name)
        covs = enumerate_valid_coverings(cluster)
        report = check_counting_identities(cluster)
        lines.append(f"N={name}: {len(covs)} valid coverings; "
                     f"plaquettes={report.n_plaquettes} "
                     f"diag counts={report.diagonal_counts} "
                     f"axial counts={report.axial_counts}")
    text = "\n".join(lines)
    (Path(outdir) / "appendix_count.txt").write_text(text)
    return text


# ---------------------------------------------------------------------------
# subcommand mains


def _cmd_sweep(args):
    overrides = {
        "cluster": args.cluster, "gamma": args.gamma, "delta": args.delta,
        "sectors": args.sectors, "levels": args.levels,
        "observables": args.observables, "structure_factor_q": args.q,
        "dimer_class": args.dimer_class, "seed": args.seed, "tol": args.tol,
        "output": args.output, "workers": args.workers,
        "target_sector": args.target_sector,
        "resume": (False if args.no_resume else None),
    }
    spec = load_spec(args.config, overrides)
    code, outdir = run_sweep(spec)
    print(f"sweep written to {outdir} (exit {code})")
    return code


def _cmd_figure(args):
    out = Path(args.output or f"plaqed-{args.name.replace('-', '_')}")
    out.mkdir(parents=True, exist_ok=True)
    if args.name == "fig3-check":
        print(_figure_fig3_check(out, args.seed, args.tol))
        return 0
    if args.name == "appendix-count":
        print(_figure_appendix_count(out, args.extended))
        return 0
    spec = _recipe_specs(args.name, args.extended, str(out), args.seed,
                         args.workers or 1)
    if any(c == "32" for c in spec.clusters) and not args.extended:
        raise SpecError("recipe includes the 32-site cluster; pass --extended")
    code, outdir = run_sweep(spec)
    print(f"figure data written to {outdir} (exit {code})")
    return code


def _cmd_dump_cluster(args):
    cluster = _cluster_from_entry(args.cluster)
    text = cluster.to_text()
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_coverings(args):
    cluster = _cluster_from_entry(args.cluster)
    from .coverings import CoveringConstraintProblem
    problem = CoveringConstraintProblem.for_cluster(
        cluster, include_nearest=args.include_nearest)
    covs = enumerate_valid_coverings(problem)
    print(f"{len(covs)} valid coverings on cluster {cluster.key}")
    for i, pattern in enumerate(covs):
        print(f"\ncovering {i} ({dict((c, pattern.bond_class.count(c)) for c in set(pattern.bond_class))}):")
        print(pattern_diagram(cluster, pattern))
    return 0


def _cmd_vbs_check(args):
    cluster = _cluster_from_entry(args.cluster)
    states = [build_ss_state(cluster, off) for off in SS_OFFSETS]
    print(f"cluster {cluster.key}: four dimer-product states")
    g = gram_matrix(states)
    print("gram matrix:")
    for row in g:
        print("  " + " ".join(f"{x: .6f}" for x in row))
    deltas = [float(t) for t in args.deltas.split(",")] if args.deltas \
        else [0.1, 0.35, 0.7, 1.0]
    worst = 0.0
    for st in states:
        for delta in deltas:
            gamma = 0.0 if delta < 1.0 else args.gamma
            op = build_operator(cluster, ModelParams(j=1.0, gamma=gamma, delta=delta))
            cfg, amp = op.apply_sparse(st.configs, st.amps)
            resid = float(np.linalg.norm(amp))
            worst = max(worst, resid)
            print(f"  offset {st.pattern.offset} gamma={gamma:g} delta={delta:g}: "
                  f"|H psi| = {resid:.3e}")
    print(f"worst residual: {worst:.3e}")
    for st in states:
        print(f"\noffset {st.pattern.offset}:")
        print(pattern_diagram(cluster, st.pattern))
    return 0 if worst < 1e-10 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plaqed",
        description="Exact diagonalization sweeps for the plaquette-projector "
                    "frustrated square-lattice model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config", help="YAML sweep configuration")
    p.add_argument("--cluster")
    p.add_argument("--gamma")
    p.add_argument("--delta")
    p.add_argument("--sectors", help='"all" or semicolon list like "0,0;pi,0"')
    p.add_argument("--levels", type=int)
    p.add_argument("--observables", help="comma list: " + ",".join(OBSERVABLE_NAMES))
    p.add_argument("--q", help='semicolon list of momenta, e.g. "pi,0;pi,pi"')
    p.add_argument("--dimer-class", dest="dimer_class", choices=("first", "second"))
    p.add_argument("--target-sector", dest="target_sector")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--output")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-resume", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("figure", help="reproduce a named figure's data series")
    p.add_argument("name", choices=("fig4", "fig5", "fig6", "fig7", "fig8",
                                    "fig9", "fig3-check", "appendix-count"))
    p.add_argument("--extended", action="store_true",
                   help="include 32-site runs (long)")
    p.add_argument("--output")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_figure)

    p = sub.add_parser("dump-cluster", help="print site/bond/plaquette tables")
    p.add_argument("--cluster", default="16")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_dump_cluster)

    p = sub.add_parser("coverings", help="enumerate valid dimer coverings")
    p.add_argument("--cluster", default="16")
    p.add_argument("--include-nearest", action="store_true",
                   help="also admit nearest-neighbor dimers (exploratory)")
    p.set_defaults(func=_cmd_coverings)

    p = sub.add_parser("vbs-check", help="verify the dimer-product eigenstates")
    p.add_argument("--cluster", default="16")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--deltas", help="comma list of delta values")
    p.set_defaults(func=_cmd_vbs_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

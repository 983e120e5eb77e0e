"""Experiment orchestration: declarative JSON configs, dispatch, manifests.

Every run is a pure function of its config (seed included; wall-clock time
is never used for anything but the recorded runtime), writes its tabular
results as RFC-4180 CSV and summaries as sorted-key JSON via atomic
temp-then-rename, and emits a manifest with the config hash and a SHA-256
inventory of every produced file. Thread count never changes output bytes:
parallel units are pure and aggregated in index order.
"""

import math
import os
import time
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import __version__
from .concentration import (compare_restricted, entropy_global_probe,
                            entropy_suite, psi_herbst, rank_one_verify,
                            tail_experiment, truncation_gap,
                            write_perturbation_report, write_tail_report)
from .coarse import (animal_occupancy_check, chi_upper_probe,
                     supermartingale_step_check, write_animal_report)
from .errors import AssumptionError, ParameterError
from .io import (json_dumps, sha256_of_file, sha256_of_json, write_csv,
                 write_json)
from .lattice import AnimalSpec, BoxRegion, enumerate_animals, norms
from .lyapunov import estimate_alpha, write_alpha_report
from .oracle import enumerate_paths, sample_walk_weight
from .potential import DistributionSpec, sample_field
from .rng import derive_seed
from .solver import region_sites, travel_weight

EXPERIMENTS = ("solve", "lyapunov", "tails", "compare", "truncate", "perturb",
               "entropy", "psi", "animals", "chi", "oracle-check")
FORMAT_VERSION = 1


@dataclass(eq=False)
class ExperimentConfig:
    experiment: str
    spec: DistributionSpec
    geometry: dict = dc_field(default_factory=dict)
    sampling: dict = dc_field(default_factory=dict)
    output: dict = dc_field(default_factory=dict)
    override_assumptions: bool = False

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ParameterError(
                f"experiment: {self.experiment!r} is not one of {EXPERIMENTS}")
        if "seed" not in self.sampling:
            raise ParameterError(
                "sampling.seed: mandatory, wall-clock seeding is not allowed")
        if not isinstance(self.sampling["seed"], int):
            raise ParameterError("sampling.seed: must be an integer")
        return self

    @property
    def seed(self):
        return int(self.sampling["seed"])

    def to_json(self):
        return {
            "experiment": self.experiment,
            "spec": self.spec.to_json(),
            "geometry": self.geometry,
            "sampling": self.sampling,
            "output": self.output,
            "override_assumptions": self.override_assumptions,
        }

    @classmethod
    def from_json(cls, obj):
        for key in ("experiment", "spec"):
            if key not in obj:
                raise ParameterError(f"{key}: missing from config")
        return cls(
            experiment=obj["experiment"],
            spec=DistributionSpec.from_json(obj["spec"]),
            geometry=dict(obj.get("geometry", {})),
            sampling=dict(obj.get("sampling", {})),
            output=dict(obj.get("output", {})),
            override_assumptions=bool(obj.get("override_assumptions", False)),
        ).validate()

    @classmethod
    def from_file(cls, path):
        import json

        with open(str(path)) as fh:
            return cls.from_json(json.load(fh))


@dataclass(eq=False)
class RunManifest:
    config_hash: str
    code_version: str
    experiment: str
    seed: int
    runtime_seconds: float
    assertions: dict  # name -> bool
    files: list  # [{"name":..., "sha256":...}]
    format_version: int = FORMAT_VERSION
    warnings: tuple = ()

    def all_passed(self):
        return all(self.assertions.values())

    def to_json(self):
        return {
            "config_hash": self.config_hash,
            "code_version": self.code_version,
            "experiment": self.experiment,
            "seed": self.seed,
            "runtime_seconds": self.runtime_seconds,
            "assertions": self.assertions,
            "files": self.files,
            "format_version": self.format_version,
            "warnings": list(self.warnings),
        }


def _geometry_x(cfg, default=(4, 0)):
    return tuple(int(v) for v in cfg.geometry.get("x", list(default)))


def _region_of(cfg, x):
    if "sites" in cfg.geometry:
        return np.asarray(cfg.geometry["sites"], dtype=np.int64)
    factor = float(cfg.geometry.get("box_factor", 2))
    radius = int(math.ceil(factor * norms(x)[0]))
    return BoxRegion.centered(radius, len(x))


def _run_solve(cfg, out, threads):
    x = _geometry_x(cfg)
    region = _region_of(cfg, x)
    origin = (0,) * len(x)
    field = sample_field(cfg.spec, _bounding_box(region), cfg.seed)
    res = travel_weight(field, region, origin, x,
                        taboo=[tuple(t) for t in cfg.geometry.get("taboo", [])])
    rows = [z + (e,) for z, e in res.iter_rows()]
    csv_path = os.path.join(out, "solve.csv")
    write_csv(csv_path, tuple(f"z{i+1}" for i in range(len(x))) + ("e_value",),
              rows)
    write_json(os.path.join(out, "solve.json"), {
        "target": list(res.target),
        "taboo": [list(t) for t in sorted(res.taboo)],
        "residual": res.residual,
        "method": res.method,
        "site_count": len(res.siteset),
    })
    e = res.e_values
    return {"e_values_in_unit_interval": bool(np.all((e >= 0) & (e <= 1))),
            "target_e_is_one": bool(e[res.siteset.index_one(x)] == 1.0)}, \
        [csv_path, os.path.join(out, "solve.json")]


def _bounding_box(region):
    sites = region_sites(region)
    lo = tuple(int(v) for v in sites.min(axis=0))
    hi = tuple(int(v) + 1 for v in sites.max(axis=0))
    return BoxRegion(lo, hi)


def _run_lyapunov(cfg, out, threads):
    direction = tuple(int(v) for v in cfg.geometry.get("direction", [1, 0]))
    est = estimate_alpha(cfg.spec, direction,
                         cfg.sampling.get("n_grid", [2, 4, 8]),
                         cfg.sampling.get("samples", 50), cfg.seed,
                         float(cfg.geometry.get("box_factor", 2)))
    csv_path = os.path.join(out, "alpha.csv")
    json_path = os.path.join(out, "alpha.json")
    write_alpha_report(est, csv_path, json_path)
    return {"band_ok": bool(est.band_ok),
            "alpha_nonnegative": est.alpha_hat >= 0}, [csv_path, json_path]


def _run_tails(cfg, out, threads):
    x = _geometry_x(cfg)
    report = tail_experiment(
        cfg.spec, x, cfg.geometry.get("side", "UpperExp"),
        cfg.sampling.get("samples", 500),
        cfg.sampling.get("t_grid", [0.0, 0.5, 1.0, 1.5, 2.0]), cfg.seed,
        box_factor=float(cfg.geometry.get("box_factor", 2)),
        alpha_ref=cfg.geometry.get("alpha_ref"),
        override=cfg.override_assumptions, threads=threads)
    csv_path = os.path.join(out, "tails.csv")
    json_path = os.path.join(out, "tails.json")
    write_tail_report(report, csv_path, json_path)
    tails = report.tails()
    return {"tails_non_increasing": bool(np.all(np.diff(tails) <= 1e-12)),
            "tails_in_unit_interval": bool(np.all((tails >= 0) & (tails <= 1)))}, \
        [csv_path, json_path]


def _run_compare(cfg, out, threads):
    x = _geometry_x(cfg)
    rep = compare_restricted(cfg.spec, x,
                             cfg.geometry.get("box_factor_grid", [1.5, 3.0]),
                             cfg.sampling.get("samples", 200), cfg.seed,
                             threads=threads)
    csv_path = os.path.join(out, "compare.csv")
    write_csv(csv_path, ("box_factor", "mean_cost"),
              list(zip(rep["box_factors"], rep["mean_costs"])))
    json_path = os.path.join(out, "compare.json")
    write_json(json_path, rep)
    return {"per_sample_monotone": rep["monotone_violations"] == 0,
            "log2_event_absent": rep["log2_event_count"] == 0}, \
        [csv_path, json_path]


def _run_truncate(cfg, out, threads):
    x = _geometry_x(cfg)
    rep = truncation_gap(cfg.spec, x, float(cfg.geometry.get("gamma", 0.5)),
                         cfg.sampling.get("samples", 500), cfg.seed,
                         threads=threads, override=cfg.override_assumptions)
    gaps = rep.pop("gaps")
    csv_path = os.path.join(out, "truncate.csv")
    write_csv(csv_path, ("sample", "gap"), list(enumerate(gaps.tolist())))
    json_path = os.path.join(out, "truncate.json")
    write_json(json_path, rep)
    return {"gap_nonnegative": rep["negative_gap_count"] == 0}, \
        [csv_path, json_path]


def _run_perturb(cfg, out, threads):
    x = _geometry_x(cfg, default=(2, 1, 0))
    records = rank_one_verify(cfg.spec, x, cfg.sampling.get("samples", 50),
                              cfg.seed,
                              float(cfg.geometry.get("box_factor", 2)))
    csv_path = os.path.join(out, "perturb.csv")
    json_path = os.path.join(out, "perturb.json")
    write_perturbation_report(records, csv_path, json_path)
    return {"sandwich_holds": not any(r.violates() for r in records)}, \
        [csv_path, json_path]


def _run_entropy(cfg, out, threads):
    x = _geometry_x(cfg)
    if cfg.spec.finite_support() is None and not cfg.override_assumptions:
        raise AssumptionError(
            "finite-support",
            "entropy experiment requires a finite-support marginal")
    env_region = BoxRegion.centered(
        int(cfg.geometry.get("env_radius", max(2, norms(x)[0]))), len(x))
    env = sample_field(cfg.spec, env_region, derive_seed(cfg.seed, 0xE17))
    lambda_grid = cfg.sampling.get("lambda_grid", [-0.1, -0.5, -1.0])
    records = entropy_suite(cfg.spec, env, x, lambda_grid, cfg.seed)
    probe = entropy_global_probe(cfg.spec, x, lambda_grid,
                                 cfg.sampling.get("samples", 100),
                                 derive_seed(cfg.seed, 0x91), threads=threads)
    csv_path = os.path.join(out, "entropy.csv")
    write_csv(csv_path, ("lambda", "ent", "rhs", "psi"),
              [(r.lam, r.ent_value, r.rhs_bound, r.psi_value) for r in records])
    json_path = os.path.join(out, "entropy.json")
    write_json(json_path, probe)
    return {
        "per_site_inequality": all(r.ent_value <= r.rhs_bound + 1e-9
                                   for r in records),
        "entropy_nonnegative": all(r.ent_value >= -1e-12 for r in records),
        "psi_nonnegative": all(r.psi_value >= -1e-12 for r in records),
    }, [csv_path, json_path]


def _run_psi(cfg, out, threads):
    x = _geometry_x(cfg)
    x_grid = [tuple(int(v) for v in xx)
              for xx in cfg.geometry.get("x_grid", [list(x)])]
    rep = psi_herbst(cfg.spec, x_grid,
                     cfg.sampling.get("lambda_grid", [-0.5, -0.25, -0.1, 0.0]),
                     cfg.sampling.get("samples", 500), cfg.seed,
                     box_factor=float(cfg.geometry.get("box_factor", 2)),
                     threads=threads)
    csv_path = os.path.join(out, "psi.csv")
    write_csv(csv_path, ("x", "lambda", "psi", "ratio"),
              [(" ".join(str(v) for v in r["x"]), r["lambda"], r["psi"],
                r["ratio"]) for r in rep["rows"]])
    json_path = os.path.join(out, "psi.json")
    write_json(json_path, {"psi_min": rep["psi_min"],
                           "ratio_max": rep["ratio_max"],
                           "samples": rep["samples"]})
    return {"psi_nonnegative": rep["psi_min"] >= -1e-9}, [csv_path, json_path]


def _run_animals(cfg, out, threads):
    d = int(cfg.geometry.get("d", 2))
    l_cap = int(cfg.geometry.get("l_cap", 5))
    rep = animal_occupancy_check(cfg.spec, int(cfg.geometry.get("M", 1)),
                                 float(cfg.geometry.get("kappa", 0.5)), l_cap,
                                 cfg.sampling.get("samples", 2000), cfg.seed,
                                 d=d)
    csv_path = os.path.join(out, "animals.csv")
    json_path = os.path.join(out, "animals.json")
    write_animal_report(rep, csv_path, json_path)
    counts_ok = True
    for l in range(1, l_cap + 1):
        fixed, n_fixed = enumerate_animals(AnimalSpec(d, l, "L1"), cap=l_cap)
        anch, n_anch = enumerate_animals(AnimalSpec(d, l, "L1", True), cap=l_cap)
        counts_ok &= (n_anch == l * n_fixed) and (n_anch < 4.0 ** (d * l))
    return {"anchored_count_is_l_times_fixed": counts_ok}, \
        [csv_path, json_path]


def _run_chi(cfg, out, threads):
    l = int(cfg.geometry.get("l", 8))
    kappa = float(cfg.geometry.get("kappa", 0.5))
    witness = os.path.join(out, "chi_witness.field")
    probe = chi_upper_probe(cfg.spec, l, kappa,
                            cfg.sampling.get("samples", 20), cfg.seed,
                            witness_path=witness,
                            d=int(cfg.geometry.get("d", 2)))
    sm = supermartingale_step_check(cfg.spec, l, kappa, probe["chi_probe"],
                                    cfg.sampling.get("trials", 50),
                                    derive_seed(cfg.seed, 0x51))
    json_path = os.path.join(out, "chi.json")
    write_json(json_path, {
        "chi_probe": probe["chi_probe"],
        "all_strictly_inside": probe["all_strictly_inside"],
        "all_witness_ok": probe["all_witness_ok"],
        "probe_caveat": probe["probe_caveat"],
        "supermartingale_violations": sm["violations"],
        "occupied_trials": sm["occupied_trials"],
    })
    csv_path = os.path.join(out, "chi.csv")
    write_csv(csv_path, ("config", "value"),
              list(enumerate(probe["values"])))
    return {"chi_in_open_unit_interval": probe["all_strictly_inside"],
            "witness_lower_bound": probe["all_witness_ok"],
            "supermartingale_step": sm["violations"] == 0}, \
        [csv_path, json_path, witness, witness + ".json"]


DEFAULT_ORACLE_BATTERY = tuple(
    {"seed": s, "x": [2, 1], "radius": 3, "L": 24, "episodes": 20000}
    for s in (11, 23, 37, 41, 53)
)


def oracle_check(cfg, out=None, threads=1):
    """Cross-validation battery: the linear solver against exhaustive path
    enumeration (sandwich, exact) and Monte Carlo (4 standard errors)."""
    battery = cfg.sampling.get("battery", None)
    warn = []
    if battery is None:
        battery = [dict(b) for b in DEFAULT_ORACLE_BATTERY]
    if not battery:
        warn.append("empty oracle battery: vacuous pass")
        warnings.warn(warn[-1])
    results = []
    for item in battery:
        x = tuple(int(v) for v in item["x"])
        region = BoxRegion.centered(int(item["radius"]), len(x))
        fld = sample_field(cfg.spec, region, int(item["seed"]))
        origin = (0,) * len(x)
        e_solve = travel_weight(fld, region, origin, x).e_at(origin)
        enum = enumerate_paths(fld, region, x, L=int(item["L"]))
        sandwich = (enum.partial_weight - 1e-13 <= e_solve
                    <= enum.partial_weight + enum.remainder_bound + 1e-13)
        mc = sample_walk_weight(fld, region, x, int(item["episodes"]),
                                derive_seed(int(item["seed"]), 0x6C))
        mc_ok = abs(mc.estimate - e_solve) <= 4 * mc.std_error
        results.append({"seed": item["seed"], "e_solve": e_solve,
                        "partial": enum.partial_weight,
                        "remainder": enum.remainder_bound,
                        "sandwich_ok": bool(sandwich),
                        "mc_estimate": mc.estimate, "mc_se": mc.std_error,
                        "mc_ok": bool(mc_ok)})
    report = {
        "battery_size": len(battery),
        "results": results,
        "all_sandwich_ok": all(r["sandwich_ok"] for r in results),
        "all_mc_ok": all(r["mc_ok"] for r in results),
    }
    files = []
    if out is not None:
        json_path = os.path.join(out, "oracle_check.json")
        write_json(json_path, report)
        files.append(json_path)
    assertions = {"all_sandwich_ok": report["all_sandwich_ok"],
                  "all_mc_ok": report["all_mc_ok"]}
    return report, assertions, files, warn


_DISPATCH = {
    "solve": _run_solve,
    "lyapunov": _run_lyapunov,
    "tails": _run_tails,
    "compare": _run_compare,
    "truncate": _run_truncate,
    "perturb": _run_perturb,
    "entropy": _run_entropy,
    "psi": _run_psi,
    "animals": _run_animals,
    "chi": _run_chi,
}


def run(config: ExperimentConfig, out_dir=None, threads=1) -> RunManifest:
    config.validate()
    out = str(out_dir if out_dir is not None
              else config.output.get("directory", "results"))
    os.makedirs(out, exist_ok=True)
    start = time.perf_counter()
    warn = ()
    if config.experiment == "oracle-check":
        _, assertions, files, warn = oracle_check(config, out, threads)
    else:
        assertions, files = _DISPATCH[config.experiment](config, out, threads)
    runtime = time.perf_counter() - start
    manifest = RunManifest(
        config_hash=sha256_of_json(config.to_json()),
        code_version=__version__,
        experiment=config.experiment,
        seed=config.seed,
        runtime_seconds=runtime,
        assertions=assertions,
        files=[{"name": os.path.basename(f), "sha256": sha256_of_file(f)}
               for f in files],
        warnings=tuple(warn),
    )
    write_json(os.path.join(out, "manifest.json"), manifest.to_json())
    return manifest

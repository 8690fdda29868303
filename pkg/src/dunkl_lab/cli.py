"""Batch front end: configuration, audit orchestration, report emission.

Config is flat INI (configparser).  Every subcommand accepts --config,
--out-dir, --seed and repeatable --override section.key=value.  Exit
status: 0 all selected audits pass, 1 an audit failed, 2 configuration
error, 3 internal error.
"""

import argparse
import configparser
import hashlib
import importlib.resources
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geometry import GridFunction, RootData, WeightedGrid
from .transform import dunkl_transform
from .calculus import heat_apply, heat_kernel, kernel_of_calculus, HEAT
from .dyadic import build_dyadic, audit_dyadic
from .spaces import (InadmissibleParamsError, SpaceParams, HeatLadder,
                     band_function, besov_norm, build_ati, build_partition,
                     equivalence_audit, reference_family, tl_norm)
from .multipliers import (atomic_audit, homogeneity_audit, hormander_norm,
                          identity_symbol, imaginary_power_symbol,
                          multiplier_boundedness_audit, riesz_symbol,
                          t1_identity_audit)
from .reports import AuditReport, NormReport, _jsonable

__version__ = "0.1.0"


class ConfigError(Exception):
    pass


DEFAULTS = {
    "roots": {"multiplicities": "1.0"},
    "grid": {"window": "44.0", "points": "1408", "freq_radius": "4.0"},
    "ladders": {"delta": str(1.0 / 24.0), "base": "2.0",
                "j_min": "-4", "j_max": "3",
                "ati_k_min": "-2", "ati_k_max": "1",
                "heat_t_min": "0.02", "heat_t_max": "40.0"},
    "dyadic": {"window": "1.0", "points": "4096", "freq_radius": "4.0",
               "k_min": "0", "k_max": "1", "metrics": "euclidean,orbit"},
    "space": {"params": "0,2,2; 0.3,2,2; -0.3,1.5,2; 0.5,1.2,1.2",
              "scheme": "spectral"},
    "family": {"omegas": "1.2,1.45,1.75,2.1,2.5",
               "positions": "none,1.0,2.0,-1.5", "sigma": "5.4"},
    "transform": {"window": "12.0", "points": "1024",
                  "freq_radius": "16.0"},
    "heat": {"t_values": "0.1,0.5", "window": "12.0", "points": "1024",
             "freq_radius": "16.0"},
    "atoms": {"window": "32.0", "points": "3968", "freq_radius": "23.0",
              "j_min": "-2", "j_max": "1",
              "omega": "0.9", "x0": "1.0", "sigma": "6.7", "p": "2.0"},
    "multiplier": {"symbol": "riesz:0"},
    "run": {"seed": "0", "out_dir": "lab_out",
            "audits": "transform,heat,dyadic-audit,norms"},
}


class LabConfig:
    """Typed view over the INI file; every parse failure names the
    section and key."""

    def __init__(self, path=None, overrides=()):
        cp = configparser.ConfigParser()
        cp.read_dict(DEFAULTS)
        if path is not None:
            if not os.path.exists(path):
                raise ConfigError("config file not found: %s" % path)
            try:
                with open(path) as fh:
                    cp.read_file(fh, source=path)
            except configparser.Error as e:
                raise ConfigError("config parse error: %s" % e) from e
        for item in overrides:
            if "=" not in item:
                raise ConfigError("override must be section.key=value: %r"
                                  % item)
            key, _, value = item.partition("=")
            if "." not in key:
                raise ConfigError("override key must be section.key: %r"
                                  % key)
            sect, _, opt = key.partition(".")
            if not cp.has_section(sect):
                cp.add_section(sect)
            cp.set(sect.strip(), opt.strip(), value.strip())
        self._cp = cp
        self.validate()

    def _get(self, sect, key, cast, what):
        try:
            raw = self._cp.get(sect, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            raise ConfigError("missing config key [%s] %s" % (sect, key))
        try:
            return cast(raw)
        except ValueError:
            raise ConfigError("bad %s for [%s] %s: %r"
                              % (what, sect, key, raw))

    def getfloat(self, sect, key):
        return self._get(sect, key, float, "number")

    def getint(self, sect, key):
        return self._get(sect, key, int, "integer")

    def getstr(self, sect, key):
        return self._get(sect, key, str, "string")

    def getfloats(self, sect, key):
        raw = self.getstr(sect, key)
        try:
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        except ValueError:
            raise ConfigError("bad number list for [%s] %s: %r"
                              % (sect, key, raw))

    def space_params(self):
        raw = self.getstr("space", "params")
        scheme = self.getstr("space", "scheme")
        hom = self.root_data().homogeneous_dimension
        out = []
        for chunk in raw.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = chunk.split(",")
            if len(parts) != 3:
                raise ConfigError("bad triple in [space] params: %r" % chunk)
            try:
                s, p, q = (float(v) for v in parts)
            except ValueError:
                raise ConfigError("bad triple in [space] params: %r" % chunk)
            sp = SpaceParams(s, p, q, scheme)
            sp.check_besov(hom)
            out.append(sp)
        return out

    def root_data(self):
        return RootData(self.getfloats("roots", "multiplicities"))

    def grid(self, sect="grid"):
        return WeightedGrid(self.root_data(),
                            self.getfloat(sect, "window"),
                            self.getint(sect, "points"),
                            freq_radius=self.getfloat(sect, "freq_radius"))

    def family(self, grid):
        raw = self.getstr("family", "positions")
        positions = tuple(None if tok.strip().lower() == "none"
                          else float(tok) for tok in raw.split(",")
                          if tok.strip())
        return reference_family(grid,
                                omegas=self.getfloats("family", "omegas"),
                                positions=positions,
                                sigma=self.getfloat("family", "sigma"))

    def validate(self):
        delta = self.getfloat("ladders", "delta")
        if not (0.0 < delta <= 1.0 / 24.0):
            raise ConfigError("[ladders] delta must lie in (0, 1/24]; "
                              "got %g" % delta)
        base = self.getfloat("ladders", "base")
        if base <= 1.0:
            raise ConfigError("[ladders] base must exceed 1")
        for sect in ("grid", "dyadic", "atoms", "heat", "transform"):
            n = self.getint(sect, "points")
            if n <= 0 or n % 16:
                raise ConfigError("[%s] points must be a positive multiple "
                                  "of 16" % sect)
            if self.getfloat(sect, "window") <= 0:
                raise ConfigError("[%s] window must be positive" % sect)
        if self.getfloat("ladders", "heat_t_min") <= 0:
            raise ConfigError("[ladders] heat_t_min must be positive")
        self.space_params()        # admissibility gate at load
        mults = self.getfloats("roots", "multiplicities")
        if any(k < 0 for k in mults):
            raise ConfigError("[roots] multiplicities must be >= 0")

    def hash(self):
        lines = []
        for sect in sorted(self._cp.sections()):
            for key, val in sorted(self._cp.items(sect)):
                lines.append("%s.%s=%s" % (sect, key, val))
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()

    def as_dict(self):
        return {s: dict(self._cp.items(s)) for s in self._cp.sections()}


def _schema():
    ref = importlib.resources.files("dunkl_lab") / "report_schema.json"
    return json.loads(ref.read_text())


_TYPE_CHECKS = {
    "str": lambda v: isinstance(v, str),
    "bool": lambda v: isinstance(v, bool),
    "dict": lambda v: isinstance(v, dict),
    "dict_or_null": lambda v: v is None or isinstance(v, dict),
    "list": lambda v: isinstance(v, list),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
}


def validate_report(doc, kind):
    """Check a report dict against the shipped schema; raises ValueError."""
    spec = _schema()[kind]
    for key, ty in spec["required"].items():
        if key not in doc:
            raise ValueError("report missing %r" % key)
        if not _TYPE_CHECKS[ty](doc[key]):
            raise ValueError("report field %r has wrong type" % key)
    for key, ty in spec["optional"].items():
        if key in doc and not _TYPE_CHECKS[ty](doc[key]):
            raise ValueError("report field %r has wrong type" % key)
    return True


class Emitter:
    """Single-writer sink; records every emitted file for the manifest."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def write_audit(self, name, report):
        doc = report.to_dict()
        doc["schema_version"] = _schema()["version"]
        validate_report(doc, "audit")
        path = os.path.join(self.out_dir, "%s.json" % name)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
        self.files.append(os.path.basename(path))
        return path

    def write_norm_csv(self, name, report):
        validate_report(report.to_dict(), "norm")
        path = os.path.join(self.out_dir, "%s.csv" % name)
        with open(path, "w") as fh:
            fh.write("\n".join(report.csv_rows()) + "\n")
        self.files.append(os.path.basename(path))
        return path

    def write_manifest(self, manifest):
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        return path


def _threads():
    raw = os.environ.get("LAB_THREADS", "")
    try:
        n = int(raw) if raw else 4
    except ValueError:
        n = 4
    return max(1, n)


# ---------------------------------------------------------------------------
# audit drivers: each returns (AuditReport, [NormReport-or-None named pairs])


def run_transform(cfg, emit, rng):
    """Plancherel over a 20-member smooth family."""
    grid = cfg.grid("transform")
    x = grid.flat_nodes()[:, 0]
    w = grid.weights.ravel()
    scales = (0.8, 1.0, 1.25, 1.6)
    mods = (0.0, 0.5, 1.0, 1.5, 2.0)
    members = [(s, m) for s in scales for m in mods]

    def one(sm):
        s, m = sm
        vals = np.exp(-x ** 2 / (2.0 * s ** 2)) * np.cos(m * x)
        f = GridFunction(grid, vals)
        g = dunkl_transform(f)
        n_space = math.sqrt(float(np.sum(np.abs(vals) ** 2 * w)))
        n_freq = math.sqrt(float(np.sum(
            np.abs(g.values.ravel()) ** 2 * g.grid.weights.ravel())))
        return abs(n_freq - n_space) / n_space

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        errs = list(pool.map(one, members))
    worst = max(errs)
    rep = AuditReport("plancherel", worst <= 1e-4,
                      {"n_functions": len(members), "worst_relative": worst,
                       "errors": errs})
    emit.write_audit("transform", rep)
    norm = NormReport({"audit": "plancherel"},
                      list(range(len(members))),
                      [float(s * 10 + m) for s, m in members], errs,
                      worst)
    emit.write_norm_csv("plancherel", norm)
    return rep


def run_heat(cfg, emit, rng):
    """Mass conservation, semigroup property, and kernel-route agreement."""
    grid = cfg.grid("heat")
    x = grid.flat_nodes()[:, 0]
    w = grid.weights.ravel()
    f = GridFunction(grid, np.exp(-x ** 2 / 2.0))
    details = {}
    worst = 0.0
    for t in cfg.getfloats("heat", "t_values"):
        g = heat_apply(t, f)
        mass = abs(float(np.sum(g.values.ravel() * w))
                   - float(np.sum(f.values.ravel() * w))) \
            / abs(float(np.sum(f.values.ravel() * w)))
        h2 = heat_apply(t / 2.0, heat_apply(t / 2.0, f))
        semi = float(np.max(np.abs(h2.values - g.values))
                     / np.max(np.abs(g.values)))
        ker = kernel_of_calculus(HEAT, math.sqrt(t), np.zeros(1),
                                 grid).values.ravel()
        direct = np.array([heat_kernel(grid.root_data, t, np.zeros(1),
                                       np.array([xi])) for xi in x[::97]])
        route = float(np.max(np.abs(ker[::97] - direct))
                      / np.max(np.abs(direct)))
        details["t=%g" % t] = {"mass_defect": mass, "semigroup": semi,
                               "route_agreement": route}
        worst = max(worst, mass, semi, route)
    rep = AuditReport("heat", worst <= 1e-5, details)
    emit.write_audit("heat", rep)
    return rep


def run_dyadic(cfg, emit, rng):
    grid = cfg.grid("dyadic")
    delta = cfg.getfloat("ladders", "delta")
    k0 = cfg.getint("dyadic", "k_min")
    k1 = cfg.getint("dyadic", "k_max")
    metrics = [m.strip()
               for m in cfg.getstr("dyadic", "metrics").split(",")
               if m.strip()]
    details = {}
    passed = True
    for metric in metrics:
        sys_ = build_dyadic(grid, metric=metric, delta=delta,
                            k_min=k0, k_max=k1)
        rep = audit_dyadic(sys_)
        details[metric] = rep.details
        passed = passed and rep.passed
    rep = AuditReport("dyadic", passed, details)
    emit.write_audit("dyadic_audit", rep)
    return rep


def _machinery(cfg, grid, scheme):
    base = cfg.getfloat("ladders", "base")
    if scheme == "spectral":
        return build_partition(base, (cfg.getint("ladders", "j_min"),
                                      cfg.getint("ladders", "j_max")))
    if scheme == "ati":
        return build_ati(grid, base, cfg.getint("ladders", "ati_k_min"),
                         cfg.getint("ladders", "ati_k_max"))
    if scheme == "heat":
        return HeatLadder(cfg.getfloat("ladders", "heat_t_min"),
                          cfg.getfloat("ladders", "heat_t_max"))
    raise ConfigError("unknown [space] scheme %r" % scheme)


def run_norms(cfg, emit, rng):
    grid = cfg.grid()
    scheme = cfg.getstr("space", "scheme")
    params_list = cfg.space_params()
    machinery = _machinery(cfg, grid, scheme)
    family = cfg.family(grid)
    rows = []
    for pi, params in enumerate(params_list):
        for mi, f in enumerate(family):
            rep_b = besov_norm(f, params, machinery)
            emit.write_norm_csv("besov_%s_p%d_f%d" % (scheme, pi, mi), rep_b)
            rep_f = tl_norm(f, params, machinery)
            emit.write_norm_csv("tl_%s_p%d_f%d" % (scheme, pi, mi), rep_f)
            tail = max(rep_b.truncation["edge_low"],
                       rep_b.truncation["edge_high"])
            rows.append({"params": params.as_dict(), "member": mi,
                         "besov": rep_b.final, "tl": rep_f.final,
                         "edge_tail": tail})
    rep = AuditReport("norms", all(np.isfinite(r["besov"])
                                   and np.isfinite(r["tl"]) for r in rows),
                      {"scheme": scheme, "results": rows,
                       "worst_tail": max(r["edge_tail"] for r in rows)})
    emit.write_audit("norms", rep)
    return rep


def run_equivalence(cfg, emit, rng):
    grid = cfg.grid()
    family = cfg.family(grid)
    partition = _machinery(cfg, grid, "spectral")
    ati = _machinery(cfg, grid, "ati")
    ladder = _machinery(cfg, grid, "heat")
    rep = equivalence_audit(family, cfg.space_params(), partition, ati,
                            ladder)
    emit.write_audit("equivalence", rep)
    return rep


def _parse_symbol(spec):
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "identity":
        return identity_symbol()
    if name == "riesz":
        try:
            j = int(arg) if arg else 0
        except ValueError:
            raise ConfigError("bad riesz direction %r" % arg)
        return riesz_symbol(j)
    if name in ("imagpower", "imaginary-power"):
        try:
            tau = float(arg) if arg else 1.0
        except ValueError:
            raise ConfigError("bad imaginary-power exponent %r" % arg)
        return imaginary_power_symbol(tau)
    raise ConfigError("unknown [multiplier] symbol %r" % spec)


def run_multiplier(cfg, emit, rng):
    grid = cfg.grid()
    symbol = _parse_symbol(cfg.getstr("multiplier", "symbol"))
    family = cfg.family(grid)
    partition = _machinery(cfg, grid, "spectral")
    t1 = t1_identity_audit(family[0])
    hnorm, _per_t = hormander_norm(symbol, grid.dimension)
    bound = multiplier_boundedness_audit(symbol, family, cfg.space_params(),
                                         partition)
    details = {"t1_identity": t1.details,
               "hormander_norm": hnorm,
               "boundedness": bound.details}
    if symbol.homogeneous:
        hom = homogeneity_audit(symbol, grid.dimension)
        details["homogeneity"] = hom.details
        hom_ok = hom.passed
    else:
        hom_ok = True
    rep = AuditReport("multiplier_check",
                      t1.passed and bound.passed and hom_ok, details)
    emit.write_audit("multiplier_check", rep)
    return rep


def run_atoms(cfg, emit, rng):
    grid = cfg.grid("atoms")
    partition = build_partition(cfg.getfloat("ladders", "base"),
                                (cfg.getint("atoms", "j_min"),
                                 cfg.getint("atoms", "j_max")))
    f = band_function(grid, cfg.getfloat("atoms", "omega"),
                      cfg.getfloat("atoms", "x0"),
                      sigma=cfg.getfloat("atoms", "sigma"))
    rep, dec = atomic_audit(f, partition, p=cfg.getfloat("atoms", "p"))
    emit.write_audit("atoms", rep)
    coeffs = sorted((abs(a.coefficient) for a in dec.atoms), reverse=True)
    norm = NormReport({"audit": "atoms", "p": cfg.getfloat("atoms", "p")},
                      list(range(len(coeffs))),
                      [float(i) for i in range(len(coeffs))], coeffs,
                      dec.coefficient_norm())
    emit.write_norm_csv("atom_coefficients", norm)
    return rep


AUDITS = {
    "transform": run_transform,
    "heat": run_heat,
    "dyadic-audit": run_dyadic,
    "norms": run_norms,
    "equivalence": run_equivalence,
    "multiplier-check": run_multiplier,
    "atoms": run_atoms,
}
# dependency order for `run`
AUDIT_ORDER = ["transform", "heat", "dyadic-audit", "norms", "equivalence",
               "multiplier-check", "atoms"]


def run(cfg, out_dir, seed, selection):
    """Execute the selected audits in dependency order; returns
    (exit_status, manifest)."""
    emit = Emitter(out_dir)
    rng = np.random.default_rng(seed)
    started = time.time()
    statuses = {}
    for name in AUDIT_ORDER:
        if name not in selection:
            continue
        rep = AUDITS[name](cfg, emit, rng)
        statuses[name] = "passed" if rep.passed else "failed"
    manifest = {
        "config_hash": cfg.hash(),
        "version": __version__,
        "seed": seed,
        "started": started,
        "finished": time.time(),
        "audits": statuses,
        "files": sorted(emit.files),
    }
    emit.write_manifest(manifest)
    status = 0 if all(v == "passed" for v in statuses.values()) else 1
    return status, manifest


def _build_parser():
    ap = argparse.ArgumentParser(prog="dunkl-lab",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command")
    names = ["run"] + sorted(AUDITS)
    for name in names:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--override", action="append", default=[],
                       metavar="SECTION.KEY=VALUE")
        if name == "run":
            p.add_argument("--audits", default=None,
                           help="comma list; overrides [run] audits")
    return ap


def main(argv=None):
    ap = _build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_help()
        return 2
    try:
        cfg = LabConfig(args.config, args.override)
        out_dir = args.out_dir or cfg.getstr("run", "out_dir")
        seed = args.seed if args.seed is not None \
            else cfg.getint("run", "seed")
        if args.command == "run":
            raw = args.audits if args.audits is not None \
                else cfg.getstr("run", "audits")
            selection = [a.strip() for a in raw.split(",") if a.strip()]
            unknown = [a for a in selection if a not in AUDITS]
            if unknown:
                raise ConfigError("unknown audits: %s" % ", ".join(unknown))
        else:
            selection = [args.command]
    except (ConfigError, InadmissibleParamsError) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    try:
        status, manifest = run(cfg, out_dir, seed, selection)
    except (ConfigError, InadmissibleParamsError) as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    except Exception as e:                       # noqa: BLE001
        print("internal error: %s: %s" % (type(e).__name__, e),
              file=sys.stderr)
        return 3
    for name, verdict in manifest["audits"].items():
        print("%s: %s" % (name, verdict))
    return status


if __name__ == "__main__":
    sys.exit(main())

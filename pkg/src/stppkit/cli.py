"""Command-line entry point: simulate, fit-mle, train, evaluate, predict, grid.

Settings come from a flat ``key = value`` file (``--config``) and ``--key value``
flags, flags winning. Exit status is 0 on success, 2 on invalid input and 3 on
numeric failure. Set ``STPPKIT_THREADS`` to cap BLAS threads.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import EventSequence, NumericError, SpatialRegion, SplitSpec, ValidationError, read_jsonl, window_split, write_jsonl
from .deepstpp.model import DeepStppConfig
from .deepstpp.train import (
    checkpoint_extra,
    mixture_params,
    predict_event,
    region_from_extra,
    rep_locations_from_extra,
    train,
    window_kernel_params,
)
from .evaluation import (
    PoissonPredictive,
    SthpPredictive,
    StscPredictive,
    density_grid_from_model,
    hellinger,
    loglik_split,
    query_times,
    temporal_mape,
    write_metrics,
)
from .ndiff import load_checkpoint, save_checkpoint
from .parametric import (
    STHP_PRESETS,
    STSC_PRESETS,
    SthpParams,
    StscParams,
    fit_sthp_mle,
    predict_next_location_sthp,
    predict_next_time,
)
from .rng import Rng
from .simulate import simulate_poisson, simulate_sthp_cluster, simulate_sthp_thinning, simulate_stsc_grid

log = logging.getLogger("stppkit")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    name: str
    type: type
    default: object
    help: str
    choices: tuple | None = None


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


KEYS: tuple[Key, ...] = (
    Key("seed", int, 0, "root seed; split into named streams"),
    Key("sim.process", str, "sthp", "process to simulate", ("sthp", "stsc", "poisson")),
    Key("sim.preset", str, "ds1", "named parameter set (ds1, ds2, ds3)"),
    Key("sim.params", str, "", "JSON file with explicit parameters (overrides the preset)"),
    Key("sim.method", str, "cluster", "STHP simulator", ("cluster", "thinning")),
    Key("sim.horizon", float, 1000.0, "simulation horizon T"),
    Key("sim.seeds", int, 1, "number of sequences (one stream each)"),
    Key("sim.rate", float, 1.0, "poisson: events per unit time"),
    Key("sim.grid.nx", int, 101, "stsc: grid cells along x"),
    Key("sim.grid.ny", int, 101, "stsc: grid cells along y"),
    Key("data.window", float, 20.0, "window length used to cut sequences into (input, target) pairs"),
    Key("data.split_seed", int, 0, "seed of the window shuffle before the 8:1:1 split"),
    Key("data.rescale", _bool, False, "rescale times so the mean gap is 1"),
    Key("fit.max_iter", int, 500, "BFGS iteration cap"),
    Key("fit.gtol", float, 1e-6, "BFGS gradient tolerance"),
    Key("fit.gradient", str, "analytic", "gradient used by BFGS", ("analytic", "fd")),
    Key("train.d_model", int, 128, "embedding width"),
    Key("train.layers", int, 3, "encoder layers"),
    Key("train.heads", int, 2, "attention heads"),
    Key("train.d_hidden", int, 128, "encoder feed-forward width"),
    Key("train.d_z", int, 128, "latent dimension"),
    Key("train.dec_hidden", int, 128, "decoder hidden width"),
    Key("train.dec_hidden_layers", int, 2, "decoder hidden layers"),
    Key("train.n_reps", int, 50, "representative points J"),
    Key("train.max_history", int, 64, "most recent events kept per window"),
    Key("train.kl_weight", float, 1e-3, "weight on the KL term"),
    Key("train.lr", float, 0.01, "Adam learning rate"),
    Key("train.epochs", int, 200, "training epochs"),
    Key("train.batch_size", int, 128, "windows per batch"),
    Key("train.time_scale", float, 1.0, "time unit of the encoder's time feature"),
    Key("train.pos_scale", float, 100.0, "range of the normalized positional times"),
    Key("train.region_inflate", float, 0.1, "relative inflation of the representative-point box"),
    Key("train.rep_mode", str, "fixed", "representative locations drawn once or per window", ("fixed", "resample")),
    Key("eval.truth", str, "", "JSON with ground-truth parameters (enables hd and mape)"),
    Key("eval.split", str, "test", "splits to evaluate, comma separated"),
    Key("eval.grid.nx", int, 50, "density grid cells along x"),
    Key("eval.grid.ny", int, 50, "density grid cells along y"),
    Key("eval.hd.times", int, 10, "query times per window for the Hellinger distance"),
    Key("eval.hd.span", float, 0.0, "span after the last event for hd query times (0: twice the mean gap)"),
    Key("eval.mape.points", int, 100, "intensity samples per window for MAPE"),
    Key("eval.mape.span", float, 0.0, "span after the last event for MAPE samples (0: data.window)"),
    Key("eval.stsc.grid", int, 101, "grid side used for ground-truth STSC spatial integrals"),
    Key("predict.latent_samples", int, 0, "latent draws averaged per prediction (0: latent mean)"),
    Key("predict.tail_tol", float, 1e-8, "survival tail cut-off of the next-time integral"),
    Key("grid.window", int, 0, "index of the test window to export"),
    Key("grid.times", str, "", "comma separated query times (empty: eval.hd.times times after t_n)"),
    Key("grid.normalized", _bool, True, "export the spatial density instead of the intensity"),
)
KEY_INDEX = {k.name: k for k in KEYS}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        k, v = (part.strip() for part in line.split("=", 1))
        out[k] = v
    return out


def resolve_config(file_values: dict, overrides: dict) -> dict:
    """Merge defaults, file values and flag overrides; reject unknown keys and bad types."""
    cfg = {k.name: k.default for k in KEYS}
    for source in (file_values, overrides):
        for name, raw in source.items():
            if raw is None:
                continue
            key = KEY_INDEX.get(name)
            if key is None:
                raise ConfigError(f"unknown config key {name!r}")
            try:
                value = key.type(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{name}: cannot parse {raw!r} as {key.type.__name__}") from exc
            if key.choices and value not in key.choices:
                raise ConfigError(f"{name}: {value!r} is not one of {', '.join(key.choices)}")
            cfg[name] = value
    return cfg


# -- output bookkeeping -------------------------------------------------------

class Outputs:
    """Tracks files written by a command so a failure can remove them."""

    def __init__(self):
        self.paths: list[Path] = []

    def add(self, path) -> Path:
        p = Path(path)
        self.paths.append(p)
        return p

    def cleanup(self):
        for p in reversed(self.paths):
            try:
                p.unlink()
            except FileNotFoundError:
                pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(path: Path, command: str, cfg: dict, outputs: list[Path], extra: dict | None = None) -> None:
    """Run manifest. ``created`` is the only field that changes between identical runs."""
    body = {
        "command": command,
        "config": cfg,
        "outputs": {p.name: _sha256(p) for p in outputs},
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if extra:
        body.update(extra)
    path.write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


# -- model loading ------------------------------------------------------------

def process_params(cfg: dict):
    """Parameters for ``sim.process`` from ``sim.params`` or ``sim.preset``."""
    proc = cfg["sim.process"]
    if proc == "poisson":
        if not cfg["sim.rate"] > 0:
            raise ConfigError("sim.rate must be positive")
        return None
    presets = STHP_PRESETS if proc == "sthp" else STSC_PRESETS
    if cfg["sim.params"]:
        d = json.loads(Path(cfg["sim.params"]).read_text())
        d = d.get("params", d)
        p = SthpParams.from_dict(d) if proc == "sthp" else StscParams.from_dict(d)
    else:
        if cfg["sim.preset"] not in presets:
            raise ConfigError(f"unknown preset {cfg['sim.preset']!r}; valid presets: {', '.join(sorted(presets))}")
        p = presets[cfg["sim.preset"]]
    if proc == "sthp" and p.alpha >= p.beta:
        raise ConfigError(f"supercritical parameters: alpha/beta = {p.alpha / p.beta:.3g} >= 1")
    return p


def _params_payload(process: str, p, region: SpatialRegion | None = None, rate: float | None = None) -> dict:
    if process == "poisson":
        return {"process": "poisson", "params": {"rate": rate, "region": [*region.lo, *region.hi]}}
    return {"process": process, "params": p.to_dict()}


@dataclass
class LoadedModel:
    kind: str  # deepstpp | sthp | stsc | poisson
    payload: object
    extra: dict

    def predictive(self, window: EventSequence, history: EventSequence | None, cfg: dict, rng):
        """A model conditioned on ``window`` (parametric truths use ``history`` when given)."""
        hist = history if history is not None else window
        t_n = float(window.times[-1])
        if self.kind == "deepstpp":
            dcfg = DeepStppConfig.from_dict(self.extra["config"])
            kps = window_kernel_params(window, dcfg, self.payload, region_from_extra(self.extra), rng,
                                       cfg["predict.latent_samples"], rep_locations_from_extra(self.extra))
            return mixture_params(kps)
        if self.kind == "sthp":
            return SthpPredictive(self.payload, hist, t_n)
        if self.kind == "stsc":
            n = cfg["eval.stsc.grid"]
            return StscPredictive(self.payload, hist, (n, n), t_n)
        rate, r = self.payload
        return PoissonPredictive(rate, SpatialRegion.rectangle(r[:2], r[2:]), t_n)


def load_model(path: str) -> LoadedModel:
    p = Path(path)
    for candidate in (p, p.with_suffix(".json")):
        if candidate.suffix == ".json" and candidate.exists():
            doc = json.loads(candidate.read_text())
            break
    else:
        raise FileNotFoundError(f"no model file at {path}")
    if "tensors" in doc:
        params, extra = load_checkpoint(candidate)
        return LoadedModel("deepstpp", params, extra)
    kind = doc.get("process")
    if kind == "sthp":
        return LoadedModel(kind, SthpParams.from_dict(doc["params"]), doc)
    if kind == "stsc":
        return LoadedModel(kind, StscParams.from_dict(doc["params"]), doc)
    if kind == "poisson":
        return LoadedModel(kind, (float(doc["params"]["rate"]), doc["params"]["region"]), doc)
    raise ValidationError(f"{path}: not a checkpoint manifest or a parameter file with a known 'process'")


def load_split(data: str, cfg: dict):
    seq = read_jsonl(data, rescale=cfg["data.rescale"])
    return seq, window_split(seq, SplitSpec(cfg["data.window"], seed=cfg["data.split_seed"]))


def deepstpp_config(cfg: dict) -> DeepStppConfig:
    names = [k.name for k in KEYS if k.name.startswith("train.")]
    return DeepStppConfig(**{n.split(".", 1)[1]: cfg[n] for n in names}, seed=cfg["seed"])


# -- commands -------------------------------------------------------------------

def cmd_simulate(cfg: dict, out: Path, outputs: Outputs) -> None:
    if not cfg["sim.horizon"] > 0:
        raise ConfigError("sim.horizon must be positive")
    if cfg["sim.seeds"] < 1:
        raise ConfigError("sim.seeds must be at least 1")
    proc = cfg["sim.process"]
    p = process_params(cfg)
    out.mkdir(parents=True, exist_ok=True)
    root = Rng(cfg["seed"]).child("sim")
    T = cfg["sim.horizon"]
    region = SpatialRegion.rectangle((0.0, 0.0), (1.0, 1.0))
    files = []
    for k in range(cfg["sim.seeds"]):
        rng = root.child(k)
        if proc == "sthp":
            sim = simulate_sthp_cluster if cfg["sim.method"] == "cluster" else simulate_sthp_thinning
            seq = sim(p, T, rng)
        elif proc == "stsc":
            seq = simulate_stsc_grid(p, T, rng, (cfg["sim.grid.nx"], cfg["sim.grid.ny"]))
        else:
            seq = simulate_poisson(cfg["sim.rate"], region, T, rng)
        path = outputs.add(out / f"seq_{k:03d}.jsonl")
        write_jsonl(seq, path)
        files.append(path)
    params_path = outputs.add(out / "params.json")
    params_path.write_text(json.dumps(_params_payload(proc, p, region, cfg["sim.rate"]), indent=1, sort_keys=True) + "\n")
    files.append(params_path)
    extra = {"process": proc, "horizon": T, "seed": cfg["seed"], **_params_payload(proc, p, region, cfg["sim.rate"])}
    write_manifest(outputs.add(out / "manifest.json"), "simulate", cfg, files, extra)


def cmd_fit_mle(cfg: dict, data: str, out: Path, outputs: Outputs) -> None:
    seq = read_jsonl(data, rescale=cfg["data.rescale"])
    res = fit_sthp_mle(seq, gtol=cfg["fit.gtol"], max_iter=cfg["fit.max_iter"], gradient=cfg["fit.gradient"])
    out.mkdir(parents=True, exist_ok=True)
    params_path = outputs.add(out / "params.json")
    payload = {"process": "sthp", "params": res.params.to_dict(), "loglik": res.loglik,
               "converged": res.converged, "iterations": res.iterations, "message": res.message}
    params_path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    trace_path = outputs.add(out / "trace.csv")
    _write_csv(trace_path, ["iteration", "loglik"], ((r["iteration"], r["loglik"]) for r in res.trace))
    write_manifest(outputs.add(out / "manifest.json"), "fit-mle", cfg, [params_path, trace_path],
                   {"data": str(data), "data_sha256": _sha256(Path(data))})
    if not res.converged:
        log.warning("BFGS stopped without converging: %s", res.message)


def cmd_train(cfg: dict, data: str, out: Path, outputs: Outputs) -> None:
    _, split = load_split(data, cfg)
    dcfg = deepstpp_config(cfg)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / "model"
    outputs.add(stem.with_suffix(".bin"))
    outputs.add(stem.with_suffix(".json"))
    res = train(split.train, dcfg, split.val, checkpoint=str(stem),
                on_epoch=lambda s: log.info("epoch %d train %.6g val %.6g", s.epoch, s.train_loss, s.val_loss))
    if not stem.with_suffix(".bin").exists():
        save_checkpoint(res.params, stem, extra=checkpoint_extra(dcfg, res.region, res.best_epoch, res.rep_locations))
    trace_path = outputs.add(out / "loss_trace.csv")
    _write_csv(trace_path, ["epoch", "train_loss", "val_loss", "clamped"],
               ((s.epoch, s.train_loss, s.val_loss, s.clamped) for s in res.trace))
    write_manifest(outputs.add(out / "manifest.json"), "train", cfg,
                   [stem.with_suffix(".bin"), stem.with_suffix(".json"), trace_path],
                   {"data": str(data), "data_sha256": _sha256(Path(data)), "best_epoch": res.best_epoch,
                    "windows": {"train": len(split.train), "val": len(split.val), "test": len(split.test)}})


def _mean_gap(seq: EventSequence) -> float:
    return float(np.mean(np.diff(seq.times))) if len(seq) > 1 else 1.0


def evaluate_split(model: LoadedModel, pairs, seq: EventSequence, cfg: dict, truth: LoadedModel | None, rng: Rng) -> dict:
    """Mean metrics over the (window, target) pairs of one split."""
    ll_s, ll_t, hds, mapes = [], [], [], []
    nx, ny = cfg["eval.grid.nx"], cfg["eval.grid.ny"]
    hd_span = cfg["eval.hd.span"] or 2.0 * _mean_gap(seq)
    mape_span = cfg["eval.mape.span"] or cfg["data.window"]
    region = None
    if model.kind == "deepstpp":
        region = region_from_extra(model.extra)
    elif truth is not None and truth.kind == "stsc":
        region = truth.payload.region
    else:
        region = SpatialRegion.bounding_box(seq.locations, 0.1)
    for k, (window, target) in enumerate(pairs):
        # parametric models condition on the full history, the network only on the window
        history = seq.through(float(window.times[-1]))
        pred = model.predictive(window, history, cfg, rng.child(k).generator())
        a, b = loglik_split(pred, target)
        ll_s.append(a)
        ll_t.append(b)
        if truth is not None:
            true_pred = truth.predictive(window, history, cfg, None)
            ts = query_times(pred.t_n, hd_span, cfg["eval.hd.times"])
            hd = [hellinger(density_grid_from_model(pred, t, region, nx, ny),
                            density_grid_from_model(true_pred, t, region, nx, ny)) for t in ts]
            hds.append(float(np.mean(hd)))
            ms = query_times(pred.t_n, mape_span, cfg["eval.mape.points"])
            mapes.append(temporal_mape(pred.temporal_intensity, true_pred.temporal_intensity, ms))
    out = {"windows": len(pairs), "ll_space": float(np.mean(ll_s)), "ll_time": float(np.mean(ll_t))}
    if truth is not None:
        out["hd"] = float(np.mean(hds))
        out["mape"] = float(np.mean(mapes))
    return out


def cmd_evaluate(cfg: dict, data: str, model_path: str, out: Path, outputs: Outputs) -> None:
    seq, split = load_split(data, cfg)
    model = load_model(model_path)
    truth = load_model(cfg["eval.truth"]) if cfg["eval.truth"] else None
    rng = Rng(cfg["seed"]).child("eval")
    metrics = {}
    for name in (s.strip() for s in cfg["eval.split"].split(",")):
        pairs = getattr(split, name, None)
        if name not in ("train", "val", "test"):
            raise ConfigError(f"eval.split: unknown split {name!r}")
        if not pairs:
            raise ValidationError(f"split {name!r} has no windows")
        metrics[name] = evaluate_split(model, pairs, seq, cfg, truth, rng.child(name))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_metrics(metrics, outputs.add(out))


def cmd_predict(cfg: dict, data: str, model_path: str, out: Path, outputs: Outputs) -> None:
    seq, split = load_split(data, cfg)
    model = load_model(model_path)
    rng = Rng(cfg["seed"]).child("predict")
    out.parent.mkdir(parents=True, exist_ok=True)
    path = outputs.add(out)
    with open(path, "w") as fh:
        for k, (window, target) in enumerate(split.test):
            gen = rng.child(k).generator()
            if model.kind == "deepstpp":
                dcfg = DeepStppConfig.from_dict(model.extra["config"])
                t_hat, s_hat = predict_event(window, dcfg, model.payload, gen, cfg["predict.latent_samples"],
                                             region_from_extra(model.extra), cfg["predict.tail_tol"],
                                             rep_locations_from_extra(model.extra))
            elif model.kind == "sthp":
                pred = model.predictive(window, None, cfg, gen)
                t_hat = predict_next_time(pred.temporal_intensity, pred.compensator, pred.t_n, cfg["predict.tail_tol"])
                s_hat = predict_next_location_sthp(model.payload, window, cfg["predict.tail_tol"])
            else:
                raise ValidationError(f"predict supports deepstpp checkpoints and sthp parameters, not {model.kind}")
            fh.write(json.dumps({"window": k, "t": float(t_hat), "x": float(s_hat[0]), "y": float(s_hat[1]),
                                 "target": {"t": target.t, "x": target.x, "y": target.y}}) + "\n")


def cmd_grid(cfg: dict, data: str, model_path: str, out: Path, outputs: Outputs) -> None:
    seq, split = load_split(data, cfg)
    model = load_model(model_path)
    idx = cfg["grid.window"]
    if not 0 <= idx < len(split.test):
        raise ConfigError(f"grid.window {idx} out of range (test split has {len(split.test)} windows)")
    window, _ = split.test[idx]
    pred = model.predictive(window, seq.through(float(window.times[-1])), cfg,
                            Rng(cfg["seed"]).child("grid").generator())
    if cfg["grid.times"]:
        times = [float(v) for v in cfg["grid.times"].split(",")]
    else:
        times = query_times(pred.t_n, cfg["eval.hd.span"] or 2.0 * _mean_gap(seq), cfg["eval.hd.times"])
    if model.kind == "deepstpp":
        region = region_from_extra(model.extra)
    elif model.kind == "stsc":
        region = model.payload.region
    else:
        region = SpatialRegion.bounding_box(seq.locations, 0.1)
    out.mkdir(parents=True, exist_ok=True)
    for k, t in enumerate(times):
        g = density_grid_from_model(pred, float(t), region, cfg["eval.grid.nx"], cfg["eval.grid.ny"], cfg["grid.normalized"])
        g.to_csv(outputs.add(out / f"grid_{k:03d}.csv"))


# -- argument parsing ---------------------------------------------------------

SECTIONS = {
    "simulate": ("seed", "sim."),
    "fit-mle": ("data.rescale", "fit."),
    "train": ("seed", "data.", "train."),
    "evaluate": ("seed", "data.", "eval.", "predict.latent_samples"),
    "predict": ("seed", "data.", "predict."),
    "grid": ("seed", "data.", "eval.grid.", "eval.hd.", "eval.stsc.", "grid.", "predict.latent_samples"),
}


def _keys_for(command: str) -> list[Key]:
    prefixes = SECTIONS[command]
    return [k for k in KEYS if any(k.name == p or (p.endswith(".") and k.name.startswith(p)) for p in prefixes)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stppkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in SECTIONS:
        keys = _keys_for(command)
        p = sub.add_parser(command, help=f"{command} (see --help for config keys)",
                           formatter_class=argparse.RawDescriptionHelpFormatter,
                           epilog="config keys (file 'key = value' or flag):\n" + "\n".join(
                               f"  {k.name:<26} default {k.default!r:<12} {k.help}" for k in keys))
        p.add_argument("--config", help="flat 'key = value' config file")
        p.add_argument("--out", required=True, help="output path")
        if command != "simulate":
            p.add_argument("--data", required=True, help="JSONL event sequence")
        if command in ("evaluate", "predict", "grid"):
            p.add_argument("--model", required=True, help="checkpoint stem or parameter JSON")
        taken = {"--config", "--out", "--data", "--model"}
        for k in keys:
            flags = [f"--{k.name}"]
            short = "--" + k.name.split(".", 1)[1] if "." in k.name else None
            if short and short not in taken and sum(1 for o in keys if o.name.split(".", 1)[-1] == k.name.split(".", 1)[-1]) == 1:
                flags.append(short)
            taken.update(flags)
            p.add_argument(*flags, dest=k.name, default=None, metavar=k.type.__name__.lstrip("_").upper(),
                           help=f"{k.help} (default {k.default!r})")
    return parser


@contextmanager
def _thread_cap():
    n = os.environ.get("STPPKIT_THREADS")
    if not n:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=int(n)):
        yield


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    outputs = Outputs()
    try:
        file_values = parse_config_text(Path(args.config).read_text(), args.config) if args.config else {}
        overrides = {k.name: getattr(args, k.name) for k in _keys_for(args.command)}
        cfg = resolve_config(file_values, overrides)
        out = Path(args.out)
        with _thread_cap():
            if args.command == "simulate":
                cmd_simulate(cfg, out, outputs)
            elif args.command == "fit-mle":
                cmd_fit_mle(cfg, args.data, out, outputs)
            elif args.command == "train":
                cmd_train(cfg, args.data, out, outputs)
            elif args.command == "evaluate":
                cmd_evaluate(cfg, args.data, args.model, out, outputs)
            elif args.command == "predict":
                cmd_predict(cfg, args.data, args.model, out, outputs)
            else:
                cmd_grid(cfg, args.data, args.model, out, outputs)
    except NumericError as exc:
        outputs.cleanup()
        print(f"stppkit {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValidationError, ValueError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        outputs.cleanup()
        print(f"stppkit {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BaseException:
        outputs.cleanup()
        raise
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()

"""Command-line pipeline: gen, train, eval, rank, assemble, simulate, sweep.

Every subcommand accepts --config FILE (INI: a [run] section naming the
command plus a section of key = value pairs mirroring the flags); explicit
flags override config values. The fully resolved configuration is written
beside the outputs, and re-running that snapshot reproduces every output
byte for byte. Environment variables are never consulted.

Exit codes: 0 success, 2 usage/validation error, 3 runtime numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import assembly as asm
from . import dynamics as dyn
from . import metrics as mx
from . import pipeline as pl
from . import seqdata as sd
from .nn import load_checkpoint, save_checkpoint
from .predictor import Model1, train_model1
from .svgplot import svg_line_plot
from .training import TrainConfig


@dataclass
class Opt:
    name: str  # config key; flag is --name-with-dashes
    type: type = str
    default: object = None
    required: bool = False
    multi: bool = False
    flag: bool = False
    choices: tuple | None = None
    help: str = ""


def _train_opts():
    return [
        Opt("model", str, required=True, choices=("model1", "cnn", "autoencoder", "gan"),
            help="which model to train"),
        Opt("data", str, required=True, help="records CSV/JSONL"),
        Opt("out", str, required=True, help="output directory"),
        Opt("seed", int, required=True, help="training seed"),
        Opt("epochs", int, 100),
        Opt("batch_size", int, 32),
        Opt("learning_rate", float, 1e-3),
        Opt("alpha", float, 1.0, help="affinity loss weight"),
        Opt("beta", float, 1.0, help="immunogenicity loss weight"),
        Opt("gamma", float, 1.0, help="conservation loss weight"),
        Opt("dropout", float, 0.1),
        Opt("patience", int, 10, help="early-stopping patience, epochs"),
        Opt("tol", float, 1e-4, help="early-stopping improvement threshold"),
        Opt("train_fraction", float, 0.8),
        Opt("latent_dim", int, 32, help="autoencoder latent width"),
        Opt("linear", flag=True, type=bool, default=False, help="autoencoder without tanh"),
        Opt("candidates", int, 4, help="GAN: candidate count written after training"),
    ]


SUBCOMMANDS: dict[str, list[Opt]] = {
    "gen": [
        Opt("n", int, required=True, help="record count"),
        Opt("motif", str, "LQR", help="planted immunogenic motif"),
        Opt("signal", float, 0.9, help="motif/label association strength in [0,1]"),
        Opt("seed", int, required=True),
        Opt("length", int, sd.DEFAULT_PEPTIDE_LENGTH),
        Opt("out", str, required=True, help="output CSV or JSONL path"),
    ],
    "train": _train_opts(),
    "eval": [
        Opt("checkpoint", str, help="trained model checkpoint directory"),
        Opt("data", str, help="records CSV/JSONL"),
        Opt("out", str, required=True, help="output directory"),
        Opt("split", str, "all", choices=("all", "test", "train"),
            help="evaluate on all rows or one side of a seeded split"),
        Opt("train_fraction", float, 0.8),
        Opt("seed", int, 0, help="split seed (split=test/train)"),
        Opt("threshold", float, 0.5),
        Opt("pr_points", int, 50),
        Opt("from_counts", str, help="tp,tn,fp,fn — metrics from counts only"),
    ],
    "rank": [
        Opt("data", str, required=True),
        Opt("out", str, required=True, help="ranked CSV path"),
        Opt("checkpoint", str, help="autoencoder selector checkpoint"),
        Opt("w_imm", float, 1.0),
        Opt("w_cons", float, 0.5),
        Opt("w_rec", float, 0.25),
    ],
    "assemble": [
        Opt("data", str, required=True),
        Opt("out", str, required=True, help="candidate JSON path"),
        Opt("checkpoint", str, help="autoencoder selector checkpoint"),
        Opt("k", int, 4, help="maximum epitope count"),
        Opt("require", str, multi=True, help="required supertype (repeatable; default A2 A3 B7)"),
        Opt("w_imm", float, 1.0),
        Opt("w_cons", float, 0.5),
        Opt("w_rec", float, 0.25),
    ],
    "simulate": [
        Opt("model", str, "prolif", choices=("prolif", "cd8")),
        Opt("out", str, required=True, help="trajectory CSV path"),
        Opt("rho", float, 1.0),
        Opt("h", float, 0.01),
        Opt("antigen", float, 1.0, help="constant antigen concentration (prolif)"),
        Opt("t0_cells", float, 100.0),
        Opt("k_ex", float, help="exhaustion threshold (optional)"),
        Opt("n_ex", float, 2.0, help="exhaustion exponent"),
        Opt("beta_t", float, 0.05),
        Opt("beta_tv", float, 0.001),
        Opt("p", float, 1.0),
        Opt("k_ie", float, 0.01),
        Opt("rho_i", float, 0.05),
        Opt("c_v", float, 1.0),
        Opt("t0", float, 100.0, help="initial T cells (cd8)"),
        Opt("i0", float, 10.0),
        Opt("e0", float, 1.0),
        Opt("v0", float, 10.0),
        Opt("days", float, 7.0),
        Opt("step", float, 0.01),
        Opt("detection_limit", float, help="classify the outcome against this viral load"),
        Opt("check_convergence", flag=True, type=bool, default=False,
            help="print the step-halving error ratio (cd8)"),
        Opt("svg", flag=True, type=bool, default=False, help="also write an SVG plot"),
    ],
    "sweep": [
        Opt("out", str, required=True, help="sweep CSV path"),
        Opt("rho", float, 1.0),
        Opt("h", float, multi=True, help="half-saturation constant (repeatable)"),
        Opt("t0_cells", float, 100.0),
        Opt("days", float, 7.0),
        Opt("step", float, 0.01),
        Opt("k_ex", float, help="exhaustion threshold (optional)"),
        Opt("n_ex", float, 2.0),
        Opt("grid_min", float, 1e-4),
        Opt("grid_max", float, 10.0),
        Opt("grid_points", int, 25),
        Opt("svg", flag=True, type=bool, default=False),
    ],
}


# ---------------------------------------------------------------------------
# configuration resolution and snapshots
# ---------------------------------------------------------------------------

def _parse_config_value(opt: Opt, raw: str):
    if opt.flag:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if opt.multi:
        return [opt.type(part) for part in raw.split(",") if part != ""]
    return opt.type(raw)


def _load_config(path: str, command: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ValueError(f"config file not found: {path}")
    if parser.has_section("run"):
        recorded = parser.get("run", "command", fallback=command)
        if recorded != command:
            raise ValueError(
                f"config {path} was written for {recorded!r}, not {command!r}"
            )
    if not parser.has_section(command):
        raise ValueError(f"config {path} has no [{command}] section")
    opts = {o.name: o for o in SUBCOMMANDS[command]}
    values = {}
    for key, raw in parser.items(command):
        if key not in opts:
            raise ValueError(f"config {path}: unknown key {key!r} for {command}")
        values[key] = _parse_config_value(opts[key], raw)
    return values


def _format_config_value(opt: Opt, value) -> str:
    if opt.flag:
        return "true" if value else "false"
    if opt.multi:
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def snapshot_text(command: str, resolved: dict) -> str:
    lines = ["[run]", f"command = {command}", "", f"[{command}]"]
    for opt in SUBCOMMANDS[command]:
        value = resolved.get(opt.name)
        if value is None:
            continue
        lines.append(f"{opt.name} = {_format_config_value(opt, value)}")
    return "\n".join(lines) + "\n"


def _write_snapshot(command: str, resolved: dict, out_path: str):
    out = Path(out_path)
    if out.suffix:  # file output: sibling <stem>.cfg
        target = out.with_suffix(".cfg")
        target.parent.mkdir(parents=True, exist_ok=True)
    else:  # directory output
        out.mkdir(parents=True, exist_ok=True)
        target = out / "run.cfg"
    target.write_text(snapshot_text(command, resolved), encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="immunokit",
        description="epitope scoring, vaccine assembly, and immune-dynamics pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in SUBCOMMANDS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="INI config supplying defaults")
        for opt in opts:
            flag = "--" + opt.name.replace("_", "-")
            if opt.flag:
                p.add_argument(flag, dest=opt.name, action="store_true",
                               default=argparse.SUPPRESS, help=opt.help)
            elif opt.multi:
                p.add_argument(flag, dest=opt.name, type=opt.type, action="append",
                               default=argparse.SUPPRESS, help=opt.help)
            else:
                p.add_argument(flag, dest=opt.name, type=opt.type,
                               choices=opt.choices, default=argparse.SUPPRESS, help=opt.help)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """defaults <- config file <- explicit flags; validates required keys."""
    command = args.command
    resolved = {o.name: o.default for o in SUBCOMMANDS[command]}
    if args.config:
        resolved.update(_load_config(args.config, command))
    for opt in SUBCOMMANDS[command]:
        if hasattr(args, opt.name):
            resolved[opt.name] = getattr(args, opt.name)
    for opt in SUBCOMMANDS[command]:
        if opt.required and resolved.get(opt.name) is None:
            raise ValueError(f"missing required option --{opt.name.replace('_', '-')}")
    return resolved


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(cfg: dict) -> int:
    data = sd.generate_synthetic(cfg["n"], cfg["motif"], cfg["signal"], cfg["seed"],
                                 length=cfg["length"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    sd.write_records(data, out)
    _write_snapshot("gen", cfg, cfg["out"])
    print(f"wrote {len(data)} records to {out}")
    return 0


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        alpha=cfg["alpha"], beta=cfg["beta"], gamma=cfg["gamma"],
        learning_rate=cfg["learning_rate"], dropout=cfg["dropout"],
        epochs=cfg["epochs"], batch_size=cfg["batch_size"],
        patience=cfg["patience"] if cfg["patience"] > 0 else None,
        tol=cfg["tol"], seed=cfg["seed"],
    )


def cmd_train(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    tc = _train_config(cfg)
    data = sd.load_records(cfg["data"])

    if cfg["model"] == "gan":
        positives = [r.peptide for r in data.records if r.immunogenic == 1]
        gan = pl.train_gan(positives, tc)
        save_checkpoint(gan.generator.params, out / "generator",
                        meta={"model": "gan_generator", "length": gan.generator.length,
                              "noise_dim": gan.generator.noise_dim})
        save_checkpoint(gan.discriminator.params, out / "discriminator",
                        meta={"model": "gan_discriminator", "length": gan.discriminator.length})
        lines = ["epoch,gen_loss,disc_loss"]
        for e, (g, d) in enumerate(zip(gan.report.gen_loss, gan.report.disc_loss)):
            lines.append(f"{e},{repr(g)},{repr(d)}")
        (out / "report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        samples = pl.generate_candidates(gan, cfg["candidates"], seed=cfg["seed"])
        (out / "candidates.fasta").write_text(pl.candidates_to_fasta(samples), encoding="utf-8")
        _write_snapshot("train", cfg, cfg["out"])
        print(f"final: epochs={len(gan.report.gen_loss)} "
              f"gen_loss={gan.report.gen_loss[-1]:.6f} disc_loss={gan.report.disc_loss[-1]:.6f}")
        return 0

    split = sd.split_dataset(data, cfg["train_fraction"], cfg["seed"])
    if cfg["model"] == "model1":
        model, report = train_model1(split, tc)
    elif cfg["model"] == "cnn":
        model, report = pl.train_cnn_classifier(split, tc)
    else:
        model, report = pl.train_autoencoder_selector(split, cfg["latent_dim"], tc,
                                                      linear=cfg["linear"])
    model.save(out / "checkpoint", adam=tc.adam())
    report.to_csv(out / "report.csv")
    report.write_summary(out / "summary.json")
    _write_snapshot("train", cfg, cfg["out"])
    s = report.summary()
    print(f"final: epoch={s['stopped_epoch']} train_loss={s['final_train_loss']:.6f} "
          f"val_loss={s['final_val_loss']:.6f} train_acc={s['final_train_acc']:.4f} "
          f"val_acc={s['final_val_acc']:.4f}")
    return 0


def _load_eval_model(path: str):
    _, _, meta = load_checkpoint(path)
    kind = meta.get("model")
    if kind == "model1":
        model = Model1.from_checkpoint(path)
        return lambda peps: np.array([o.immunogenicity_prob for o in model.forward(peps)])
    if kind == "cnn":
        model = pl.CnnClassifier.from_checkpoint(path)
        return model.predict_prob
    if kind == "autoencoder":
        model = pl.AutoencoderSelector.from_checkpoint(path)
        return model.immunogenicity_prob
    raise ValueError(f"checkpoint model {kind!r} cannot be evaluated as a classifier")


def cmd_eval(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)

    if cfg["from_counts"]:
        try:
            tp, tn, fp, fn = (int(x) for x in cfg["from_counts"].split(","))
        except ValueError:
            raise ValueError("--from-counts expects four integers: tp,tn,fp,fn") from None
        cm = mx.ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)
        report = mx.derived_metrics(cm)
        cm.to_csv(out / "confusion.csv")
        mx.write_metrics_json(report, out / "metrics.json",
                              extra={"tp": tp, "tn": tn, "fp": fp, "fn": fn})
        _write_snapshot("eval", cfg, cfg["out"])
        print(json.dumps(report.to_dict(), sort_keys=True))
        return 0

    if not cfg["checkpoint"] or not cfg["data"]:
        raise ValueError("eval needs --checkpoint and --data (or --from-counts)")
    predict = _load_eval_model(cfg["checkpoint"])
    data = sd.load_records(cfg["data"])
    if cfg["split"] == "all":
        records = data.records
    else:
        split = sd.split_dataset(data, cfg["train_fraction"], cfg["seed"])
        records = split.test_records() if cfg["split"] == "test" else split.train_records()
    labels = np.array([r.immunogenic for r in records])
    probs = predict([r.peptide for r in records])

    cm = mx.confusion(labels, probs, threshold=cfg["threshold"])
    report = mx.derived_metrics(cm)
    auc = mx.roc_auc(labels, probs)
    cm.to_csv(out / "confusion.csv")
    mx.write_metrics_json(report, out / "metrics.json",
                          extra={"roc_auc": auc, "n": len(records),
                                 "tp": cm.tp, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn})
    mx.curve_to_csv(mx.roc_curve(labels, probs), out / "roc.csv", "fpr,tpr")
    mx.curve_to_csv(mx.pr_curve(labels, probs, points=cfg["pr_points"]),
                    out / "pr.csv", "recall,precision")
    _write_snapshot("eval", cfg, cfg["out"])
    print(json.dumps({**report.to_dict(), "roc_auc": auc}, sort_keys=True))
    return 0


def _scored_pool(cfg: dict) -> list[pl.SelectorScore]:
    data = sd.load_records(cfg["data"])
    if not data.records:
        raise ValueError(f"no records in {cfg['data']}")
    selector = None
    if cfg.get("checkpoint"):
        selector = pl.AutoencoderSelector.from_checkpoint(cfg["checkpoint"])
    weights = {
        "immunogenicity": cfg["w_imm"],
        "conservation": cfg["w_cons"],
        "reconstruction_error": cfg["w_rec"],
    }
    return pl.score_epitopes(selector, data.records, weights)


def cmd_rank(cfg: dict) -> int:
    scores = _scored_pool(cfg)
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    pl.write_scores_csv(scores, out)
    _write_snapshot("rank", cfg, cfg["out"])
    top = scores[0]
    print(f"top: {top.epitope.peptide} priority={top.priority:.4f}")
    return 0


def cmd_assemble(cfg: dict) -> int:
    scores = _scored_pool(cfg)
    required = cfg["require"] if cfg["require"] else sorted(asm.DEFAULT_REQUIRED)
    req = asm.SupertypeRequirement(required=frozenset(required))
    candidate = asm.assemble(scores, req, cfg["k"])
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(candidate.to_json(), encoding="utf-8")
    _write_snapshot("assemble", cfg, cfg["out"])
    print(asm.coverage_report(candidate, req), end="")
    return 0


def cmd_simulate(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg["model"] == "prolif":
        exhaustion = dyn.Exhaustion(cfg["k_ex"], cfg["n_ex"]) if cfg["k_ex"] else None
        params = dyn.ProliferationParams(rho=cfg["rho"], h=cfg["h"], t0_cells=cfg["t0_cells"],
                                         duration_days=cfg["days"], exhaustion=exhaustion)
        traj = dyn.simulate_proliferation(params, cfg["antigen"], step=cfg["step"])
        label = f"antigen={cfg['antigen']:g}"
    else:
        params = dyn.Cd8Params(beta_t=cfg["beta_t"], beta_tv=cfg["beta_tv"], p=cfg["p"],
                               k_ie=cfg["k_ie"], rho_i=cfg["rho_i"], c_v=cfg["c_v"])
        initial = dyn.ImmuneState(cfg["t0"], cfg["i0"], cfg["e0"], cfg["v0"])
        traj = dyn.simulate_cd8(params, initial, duration_days=cfg["days"], step=cfg["step"])
        label = "cd8"
        if cfg["check_convergence"]:
            ratio = dyn.convergence_ratio(params, initial, cfg["days"], cfg["step"])
            print(f"convergence ratio (step halving vs step/16 reference): {ratio:.3f}")
        if cfg["detection_limit"] is not None:
            print(f"outcome: {dyn.classify_outcome(traj, cfg['detection_limit'])}")
    traj.to_csv(out)
    if cfg["svg"]:
        series = [(c, traj.times, traj.column(c)) for c in traj.columns]
        svg = svg_line_plot(series, title=label, xlabel="time (days)", ylabel="count")
        out.with_suffix(".svg").write_text(svg, encoding="utf-8")
    _write_snapshot("simulate", cfg, cfg["out"])
    print(f"wrote {len(traj.times)} samples to {out}")
    return 0


def cmd_sweep(cfg: dict) -> int:
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    h_values = cfg["h"] if cfg["h"] else [0.01]
    grid = np.logspace(np.log10(cfg["grid_min"]), np.log10(cfg["grid_max"]),
                       cfg["grid_points"])
    exhaustion = dyn.Exhaustion(cfg["k_ex"], cfg["n_ex"]) if cfg["k_ex"] else None
    sweeps = []
    for h in h_values:
        params = dyn.ProliferationParams(rho=cfg["rho"], h=h, t0_cells=cfg["t0_cells"],
                                         duration_days=cfg["days"], exhaustion=exhaustion)
        sweeps.append(dyn.dose_sweep(params, grid, step=cfg["step"]))

    if len(h_values) == 1:
        dyn.sweep_to_csv(sweeps[0], out)
    else:
        header = "antigen," + ",".join(f"final_T_h{h:g}" for h in h_values)
        lines = [header]
        for i, antigen in enumerate(grid):
            lines.append(",".join([repr(float(antigen))] +
                                  [repr(sweeps[j][i][1]) for j in range(len(h_values))]))
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if cfg["svg"]:
        series = [(f"h={h:g}", [a for a, _ in sw], [t for _, t in sw])
                  for h, sw in zip(h_values, sweeps)]
        svg = svg_line_plot(series, title="final T cells vs antigen",
                            xlabel="antigen concentration", ylabel="final T cells", log_x=True)
        out.with_suffix(".svg").write_text(svg, encoding="utf-8")
    _write_snapshot("sweep", cfg, cfg["out"])
    print(f"wrote sweep over {len(grid)} antigen levels to {out}")
    return 0


_RUNNERS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "eval": cmd_eval,
    "rank": cmd_rank,
    "assemble": cmd_assemble,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return _RUNNERS[args.command](cfg)
    except (ValueError, KeyError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Experiment pipelines: a validated config in, artifacts out.

Each runner trains what it needs, then writes CSV tables, model files, a
rendered figure per table group, and finally a manifest that records the
resolved configuration and summary numbers.  All randomness is derived
from the config seeds, so a rerun with the same config reproduces every
CSV byte for byte.
"""

from __future__ import annotations

import configparser
import io
import math
import os
import re
from pathlib import Path

import numpy as np

from . import __version__, network
from .config import ExperimentConfig, MethodSpec
from .data import (
    GaussianSpec,
    MarkovSpec,
    load_mnist,
    sample_gaussian,
    sample_markov,
)
from .errors import ConfigError
from .estimators import (
    RatioEstimator,
    kl_estimate,
    mi_estimate,
    save_bundle,
    target_for_omega,
)
from .evaluation import (
    ExactConditional,
    classification_error,
    cusum_monte_carlo,
    gaussian_kl,
    gaussian_log_lr,
    gaussian_mutual_information,
    glrt_estimated_nominal,
    glrt_known_nominal,
    roc,
)
from .local import scale_spec, standard_normal_ratio, translation_spec
from .losses import preset
from .markov import fit_conditional
from .network import Mlp2, output_from_name, save_model
from .training import (
    TrainConfig,
    train_local,
    train_mutual_information,
    train_two_sample,
)


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "method"


def _train_config(cfg: ExperimentConfig, seed: int,
                  iterations: int | None = None) -> TrainConfig:
    return TrainConfig(
        iterations=iterations or cfg.iterations,
        step_size=cfg.step_size,
        smoothing=cfg.smoothing,
        mode=cfg.mode,
        seed=seed,
    )


def _resolve_method(m: MethodSpec):
    built = preset(m.preset, alpha=m.alpha, c=m.c, s=m.s, domain=m.domain)
    g0 = output_from_name(m.output or built.output_hint)
    return built, g0


def _decision_threshold(omega_name: str) -> float:
    """Where the sign decision sits on the raw network output."""
    if omega_name == "identity":
        return 1.0
    if omega_name == "posterior":
        return 0.5
    return 0.0


class _Report:
    """Collects written files and summary numbers for the manifest."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.files: list[str] = []
        self.results: dict[str, str] = {}

    def path(self, *parts) -> Path:
        p = self.out_dir.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write_text(self, relpath: str, text: str) -> Path:
        p = self.path(relpath)
        with open(p, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        self.files.append(relpath)
        return p

    def note_file(self, relpath: str) -> None:
        self.files.append(relpath)

    def result(self, key: str, value) -> None:
        if isinstance(value, float):
            self.results[key] = "%.17g" % value
        else:
            self.results[key] = str(value)


def _write_manifest(cfg: ExperimentConfig, report: _Report) -> None:
    parser = configparser.ConfigParser()
    parser["experiment"] = {
        "kind": cfg.kind,
        "seeds": " ".join(str(s) for s in cfg.seeds),
        "trials": str(cfg.trials),
        "block_sizes": " ".join(str(b) for b in cfg.block_sizes),
        "thresholds": " ".join("%g" % t for t in cfg.thresholds),
        "horizon": str(cfg.horizon),
    }
    parser["train"] = {
        "iterations": str(cfg.iterations),
        "step_size": "%g" % cfg.step_size,
        "smoothing": "%g" % cfg.smoothing,
        "mode": cfg.mode,
        "hidden": str(cfg.hidden),
    }
    parser["options"] = {k: str(v) for k, v in sorted(cfg.options.items())}
    parser["data"] = {k: (" ".join(str(x) for x in v)
                          if isinstance(v, (list, tuple)) else str(v))
                      for k, v in cfg.data.items()}
    for m in cfg.methods:
        section = f"method {m.name}"
        parser[section] = {"preset": m.preset}
        for key in ("alpha", "c", "s", "domain", "output", "hidden"):
            value = getattr(m, key)
            if value is not None:
                parser[section][key] = str(value)
    parser["versions"] = {
        "rationet": __version__,
        "numpy": np.__version__,
    }
    parser["results"] = report.results
    parser["files"] = {f"file{i}": name
                       for i, name in enumerate(sorted(report.files))}
    buf = io.StringIO()
    parser.write(buf)
    with open(report.path("manifest.ini"), "w", encoding="ascii",
              newline="\n") as fh:
        fh.write(buf.getvalue())


def _seed_prefix(seed: int, multi: bool) -> str:
    return f"seed-{seed}/" if multi else ""


def _chunked_scores(score_flat, flat: np.ndarray, trials: int, block: int,
                    chunk_rows: int = 200_000) -> np.ndarray:
    """Per-block sums of a per-sample scoring function, chunked for memory."""
    n = trials * block
    vals = np.empty(n)
    for start in range(0, n, chunk_rows):
        stop = min(start + chunk_rows, n)
        vals[start:stop] = score_flat(flat[start:stop])
    return vals.reshape(trials, block).sum(axis=1)


def _gaussian_pair_specs(data: dict) -> tuple[GaussianSpec, GaussianSpec]:
    k = data.get("k", 1)
    spec0 = GaussianSpec((data["mean0"],) * k, data["variance0"])
    spec1 = GaussianSpec((data["mean1"],) * k, data["variance1"])
    return spec0, spec1


def _run_hyptest(cfg: ExperimentConfig, report: _Report) -> None:
    from . import figures

    spec0, spec1 = _gaussian_pair_specs(cfg.data)
    k, n_train = cfg.data["k"], cfg.data["n_train"]
    multi = len(cfg.seeds) > 1
    resolved = [(m, *_resolve_method(m)) for m in cfg.methods]

    for seed in cfg.seeds:
        prefix = _seed_prefix(seed, multi)
        estimators_by_name = {}
        for idx, (m, built, g0) in enumerate(resolved):
            net = Mlp2.init(k, m.hidden or cfg.hidden, g0, seed=[seed, 20, idx])
            net, _ = train_two_sample(net, built.pair,
                                      sample_gaussian(spec0, n_train, [seed, 10]),
                                      sample_gaussian(spec1, n_train, [seed, 11]),
                                      _train_config(cfg, seed))
            save_model(net, report.path(prefix + f"model-{_slug(m.name)}.txt"))
            report.note_file(prefix + f"model-{_slug(m.name)}.txt")
            est = RatioEstimator.from_network(
                net, target_for_omega(built.omega.name),
                provenance={"preset": built.name, "seed": seed},
            )
            estimators_by_name[m.name] = est

        for block in cfg.block_sizes:
            flat0 = sample_gaussian(spec0, cfg.trials * block, [seed, 12, block])
            flat1 = sample_gaussian(spec1, cfg.trials * block, [seed, 13, block])
            curves = {}
            curves["optimum"] = roc(
                _chunked_scores(lambda x: gaussian_log_lr(spec0, spec1, x),
                                flat0, cfg.trials, block),
                _chunked_scores(lambda x: gaussian_log_lr(spec0, spec1, x),
                                flat1, cfg.trials, block),
            )
            for name, est in estimators_by_name.items():
                curves[name] = roc(
                    _chunked_scores(est.log_lr, flat0, cfg.trials, block),
                    _chunked_scores(est.log_lr, flat1, cfg.trials, block),
                )
            for name, curve in curves.items():
                rel = prefix + f"roc-{_slug(name)}-block{block}.csv"
                report.write_text(rel, curve.to_csv())
                report.result(f"auc_{_slug(name)}_block{block}_seed{seed}",
                              curve.auc)
            fig = report.path(prefix + f"roc-block{block}.png")
            figures.save_roc_figure(fig, curves,
                                    title=f"block size {block}")
            report.note_file(prefix + f"roc-block{block}.png")


def _classify_data(cfg: ExperimentConfig, seed: int):
    d = cfg.data
    if d["kind"] == "idx":
        pos, neg = d["positive_label"], d["negative_label"]
        train_x, train_y = load_mnist(d["train_images"], d["train_labels"],
                                      keep_labels={pos, neg},
                                      per_class_cap=d["per_class_cap"])
        test_x, test_y = load_mnist(d["test_images"], d["test_labels"],
                                    keep_labels={pos, neg})
        X0, X1 = train_x[train_y == neg], train_x[train_y == pos]
        labels = np.where(test_y == pos, 1, -1)
        return X0, X1, test_x, labels, None
    dim, delta = d["image_dim"], d["delta"]
    spec0 = GaussianSpec((0.0,) * dim, 1.0)
    spec1 = GaussianSpec((delta,) * dim, 1.0)
    X0 = sample_gaussian(spec0, d["n_train_per_class"], [seed, 30])
    X1 = sample_gaussian(spec1, d["n_train_per_class"], [seed, 31])
    T0 = sample_gaussian(spec0, d["n_test_per_class"], [seed, 32])
    T1 = sample_gaussian(spec1, d["n_test_per_class"], [seed, 33])
    test_x = np.vstack([T0, T1])
    labels = np.concatenate([-np.ones(len(T0), dtype=int),
                             np.ones(len(T1), dtype=int)])
    # Equal spherical covariances make the optimum error a Gaussian tail.
    separation = math.sqrt(dim) * abs(delta)
    optimum_error = 0.5 * math.erfc(separation / (2.0 * math.sqrt(2.0)))
    return X0, X1, test_x, labels, optimum_error


def _run_classify(cfg: ExperimentConfig, report: _Report) -> None:
    from . import figures

    if cfg.data["kind"] == "idx":
        for key in ("train_images", "train_labels", "test_images",
                    "test_labels"):
            if not os.path.exists(cfg.data[key]):
                raise ConfigError(f"[data] {key}: no such file {cfg.data[key]}")
    multi = len(cfg.seeds) > 1
    resolved = [(m, *_resolve_method(m)) for m in cfg.methods]
    stride = cfg.options["trace_stride"]

    for seed in cfg.seeds:
        prefix = _seed_prefix(seed, multi)
        X0, X1, test_x, labels, optimum_error = _classify_data(cfg, seed)
        if optimum_error is not None:
            report.result(f"optimum_error_seed{seed}", optimum_error)
        traces = {}
        summary = ["method,train_error,test_error"]
        for idx, (m, built, g0) in enumerate(resolved):
            tau = _decision_threshold(built.omega.name)
            net = Mlp2.init(X0.shape[1], m.hidden or cfg.hidden, g0,
                            seed=[seed, 40, idx])

            def test_error(running):
                u = running.forward(test_x)
                return classification_error(
                    lambda _: np.where(u >= tau, 1, -1), None, labels)

            net, trace = train_two_sample(net, built.pair, X0, X1,
                                          _train_config(cfg, seed),
                                          metric_hook=test_error,
                                          metric_stride=stride)
            save_model(net, report.path(prefix + f"model-{_slug(m.name)}.txt"))
            report.note_file(prefix + f"model-{_slug(m.name)}.txt")
            traces[m.name] = (trace.metric_iterations, trace.metric_values)
            rows = ["iteration,test_error"]
            rows += ["%d,%.17g" % (it, val) for it, val
                     in zip(trace.metric_iterations, trace.metric_values)]
            report.write_text(prefix + f"trace-{_slug(m.name)}.csv",
                              "\n".join(rows) + "\n")

            train_all = np.vstack([X0, X1])
            train_labels = np.concatenate(
                [-np.ones(len(X0), dtype=int), np.ones(len(X1), dtype=int)])
            u_train = net.forward(train_all)
            u_test = net.forward(test_x)
            err_train = classification_error(
                lambda _: np.where(u_train >= tau, 1, -1), None, train_labels)
            err_test = classification_error(
                lambda _: np.where(u_test >= tau, 1, -1), None, labels)
            summary.append("%s,%.17g,%.17g" % (m.name, err_train, err_test))
            report.result(f"test_error_{_slug(m.name)}_seed{seed}", err_test)
        report.write_text(prefix + "errors.csv", "\n".join(summary) + "\n")
        figures.save_trace_figure(report.path(prefix + "error-trace.png"),
                                  traces, ylabel="test error",
                                  title="running classification error")
        report.note_file(prefix + "error-trace.png")


def _run_glrt(cfg: ExperimentConfig, report: _Report) -> None:
    from . import figures

    spec0, spec1 = _gaussian_pair_specs(cfg.data)
    multi = len(cfg.seeds) > 1
    for seed in cfg.seeds:
        prefix = _seed_prefix(seed, multi)
        curves = {}
        for n in cfg.data["nominal_blocks"]:
            nominal_fixed = sample_gaussian(spec0, n, [seed, 50, n]).ravel()
            blocks0 = sample_gaussian(spec0, cfg.trials * n,
                                      [seed, 51, n]).reshape(cfg.trials, n)
            blocks1 = sample_gaussian(spec1, cfg.trials * n,
                                      [seed, 52, n]).reshape(cfg.trials, n)

            def per_block(stat):
                return (np.array([stat(b) for b in blocks0]),
                        np.array([stat(b) for b in blocks1]))

            s0, s1 = per_block(
                lambda b: float(np.sum(gaussian_log_lr(spec0, spec1, b))))
            curves[f"optimum n={n}"] = roc(s0, s1)
            s0, s1 = per_block(lambda b: glrt_known_nominal(spec0, b))
            curves[f"glrt1 n={n}"] = roc(s0, s1)
            s0, s1 = per_block(
                lambda b: glrt_estimated_nominal(nominal_fixed, b))
            curves[f"glrt2 n={n}"] = roc(s0, s1)
        for name, curve in curves.items():
            rel = prefix + f"roc-{_slug(name)}.csv"
            report.write_text(rel, curve.to_csv())
            report.result(f"auc_{_slug(name)}_seed{seed}", curve.auc)
        figures.save_roc_figure(report.path(prefix + "roc.png"), curves,
                                title="block tests")
        report.note_file(prefix + "roc.png")


def _run_cusum(cfg: ExperimentConfig, report: _Report) -> None:
    from . import figures

    spec0 = MarkovSpec(cfg.data["regime0"])
    spec1 = MarkovSpec(cfg.data["regime1"])
    order = cfg.options["order"]
    if cfg.methods:
        built, _ = _resolve_method(cfg.methods[0])
    else:
        built = preset("exp")
    multi = len(cfg.seeds) > 1

    for seed in cfg.seeds:
        prefix = _seed_prefix(seed, multi)
        curves = {"exact": cusum_monte_carlo(
            ExactConditional(spec0, spec1), spec0, spec1, cfg.thresholds,
            cfg.trials, cfg.horizon, seed=seed,
            block_len=cfg.options["block_len"])}
        for n in cfg.data["train_lengths"]:
            clr = fit_conditional(
                sample_markov(spec0, n, [seed, 60, n]),
                sample_markov(spec1, n, [seed, 61, n]),
                order, built.pair, _train_config(cfg, seed),
                hidden_joint=cfg.options["hidden_joint"],
                hidden_marginal=cfg.options["hidden_marginal"],
            )
            save_bundle(clr.joint,
                        report.path(prefix + f"model-joint-n{n}.txt"))
            report.note_file(prefix + f"model-joint-n{n}.txt")
            if clr.marginal is not None:
                save_bundle(clr.marginal,
                            report.path(prefix + f"model-marginal-n{n}.txt"))
                report.note_file(prefix + f"model-marginal-n{n}.txt")
            curves[f"approx n={n}"] = cusum_monte_carlo(
                clr, spec0, spec1, cfg.thresholds, cfg.trials, cfg.horizon,
                seed=seed, block_len=cfg.options["block_len"])
        for name, curve in curves.items():
            report.write_text(prefix + f"delay-{_slug(name)}.csv",
                              curve.to_csv())
            report.result(
                f"censored_{_slug(name)}_seed{seed}",
                "%d/%d" % (int(curve.censored_false_alarm.sum()),
                           int(curve.censored_delay.sum())),
            )
        figures.save_delay_figure(report.path(prefix + "delay.png"), curves)
        report.note_file(prefix + "delay.png")


def _single_method(cfg: ExperimentConfig):
    m = cfg.methods[0] if cfg.methods else MethodSpec(name="exp", preset="exp")
    return m, *_resolve_method(m)


def _run_kl(cfg: ExperimentConfig, report: _Report) -> None:
    from . import figures

    spec0, spec1 = _gaussian_pair_specs(cfg.data)
    m, built, g0 = _single_method(cfg)
    if built.omega.name != "log":
        raise ConfigError("divergence estimation needs a log-ratio preset")
    reference = gaussian_kl(spec1, spec0)
    report.result("closed_form", reference)
    estimates = []
    for seed in cfg.seeds:
        net = Mlp2.init(spec0.k, m.hidden or cfg.hidden, g0, seed=[seed, 70])
        net, _ = train_two_sample(net, built.pair,
                                  sample_gaussian(spec0, cfg.data["n_train"],
                                                  [seed, 71]),
                                  sample_gaussian(spec1, cfg.data["n_train"],
                                                  [seed, 72]),
                                  _train_config(cfg, seed))
        est = RatioEstimator.from_network(net, "log_likelihood_ratio")
        value = kl_estimate(
            est, sample_gaussian(spec1, cfg.data["n_eval"], [seed, 73]))
        estimates.append((seed, value))
    rows = ["seed,estimate"] + ["%d,%.17g" % pair for pair in estimates]
    report.write_text("estimates.csv", "\n".join(rows) + "\n")
    mean = float(np.mean([v for _, v in estimates]))
    report.result("mean_estimate", mean)
    figures.save_estimates_figure(
        report.path("estimates.png"),
        {m.name: [v for _, v in estimates]},
        reference=reference, ylabel="KL estimate", title="divergence recovery")
    report.note_file("estimates.png")


def _run_mi(cfg: ExperimentConfig, report: _Report) -> None:
    from . import figures

    corr = cfg.data["correlation"]
    m, built, g0 = _single_method(cfg)
    if built.omega.name != "log":
        raise ConfigError("information estimation needs a log-ratio preset")
    reference = gaussian_mutual_information(corr)
    report.result("closed_form", reference)

    def draw_pairs(n, seed_key):
        rng = np.random.default_rng(seed_key)
        x = rng.standard_normal(n)
        y = corr * x + math.sqrt(1.0 - corr ** 2) * rng.standard_normal(n)
        return x, y

    estimates = []
    for seed in cfg.seeds:
        x, y = draw_pairs(cfg.data["n_train"], [seed, 80])
        net = Mlp2.init(2, m.hidden or cfg.hidden, g0, seed=[seed, 81])
        net, _ = train_mutual_information(net, built.pair, x, y,
                                          _train_config(cfg, seed),
                                          chunk_rows=cfg.options["chunk_rows"])
        est = RatioEstimator.from_network(net, "log_likelihood_ratio")
        ex, ey = draw_pairs(cfg.data["n_eval"], [seed, 82])
        estimates.append((seed, mi_estimate(est, ex, ey)))
    rows = ["seed,estimate"] + ["%d,%.17g" % pair for pair in estimates]
    report.write_text("estimates.csv", "\n".join(rows) + "\n")
    report.result("mean_estimate", float(np.mean([v for _, v in estimates])))
    figures.save_estimates_figure(
        report.path("estimates.png"),
        {m.name: [v for _, v in estimates]},
        reference=reference, ylabel="MI estimate",
        title="information recovery")
    report.note_file("estimates.png")


def _run_local(cfg: ExperimentConfig, report: _Report) -> None:
    from . import figures

    d = cfg.data
    k = d["k"]
    if d["statistic"] == "translation":
        delta = d["delta"]
        if len(delta) == 1 and k > 1:
            delta = delta * k
        if len(delta) != k:
            raise ConfigError(
                f"[data] delta needs {k} entries, got {len(delta)}")
        spec = translation_spec(delta)
    else:
        spec = scale_spec(k)
    if cfg.methods:
        m_spec = cfg.methods[0]
    else:
        m_spec = MethodSpec(name="mean-square", preset="A1", alpha=0.0,
                            domain="real", output="identity")
    built, g0 = _resolve_method(m_spec)
    if built.omega.name != "identity" or built.omega.domain[0] != -math.inf:
        raise ConfigError(
            "local experiments need a raw-ratio preset on the whole line, "
            "e.g. preset = A1 with domain = real"
        )
    multi = len(cfg.seeds) > 1

    for seed in cfg.seeds:
        prefix = _seed_prefix(seed, multi)
        rng = np.random.default_rng([seed, 90])
        X = rng.standard_normal((d["n_train"], k))
        net = Mlp2.ramp_init(k, m_spec.hidden or cfg.hidden, g0, seed=[seed, 91])
        net, _ = train_local(net, built.pair, spec, X, _train_config(cfg, seed))
        save_model(net, report.path(prefix + "model.txt"))
        report.note_file(prefix + "model.txt")

        if k == 1:
            grid = np.linspace(d["grid_lo"], d["grid_hi"],
                               d["grid_points"]).reshape(-1, 1)
        else:
            grid = np.random.default_rng([seed, 92]).standard_normal((1000, k))
        fitted = net.forward(grid)
        truth = standard_normal_ratio(spec, grid)
        header = ",".join([f"x{i + 1}" for i in range(k)]
                          + ["estimate", "closed_form"])
        rows = [header]
        for row, u, r in zip(grid, fitted, truth):
            rows.append(",".join(["%.17g" % v for v in row]
                                 + ["%.17g" % u, "%.17g" % r]))
        report.write_text(prefix + "fit.csv", "\n".join(rows) + "\n")
        mae = float(np.mean(np.abs(fitted - truth)))
        report.result(f"mae_seed{seed}", mae)
        if k == 1:
            figures.save_fit_figure(
                report.path(prefix + "fit.png"), grid.ravel(),
                {m_spec.name: fitted}, truth=truth,
                title=f"{d['statistic']} statistic")
            report.note_file(prefix + "fit.png")


_RUNNERS = {
    "hyptest": _run_hyptest,
    "classify": _run_classify,
    "glrt": _run_glrt,
    "cusum": _run_cusum,
    "kl": _run_kl,
    "mi": _run_mi,
    "local": _run_local,
}


def run_experiment(cfg: ExperimentConfig, out_dir) -> Path:
    """Execute the configured experiment; returns the manifest path."""
    report = _Report(out_dir)
    _RUNNERS[cfg.kind](cfg, report)
    _write_manifest(cfg, report)
    return report.path("manifest.ini")

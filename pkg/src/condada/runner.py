"""End-to-end orchestration: deterministic training runs, multi-variant
comparisons, and the randomized-map verification sweep.

Every run is a pure function of (config, seed): model init, projection
sampling, and batch shuffles all draw from streams derived from the run seed,
and every emitted file is byte-reproducible.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np

from . import analysis as A
from . import conditioning as C
from . import networks as N
from . import objectives as O
from . import optim as opt
from . import tensor as T
from .config import (
    _STREAM_ADIST,
    _STREAM_PROJ,
    _STREAM_SRC_BATCHES,
    _STREAM_TGT_BATCHES,
    ExperimentConfig,
)
from .datagen import LabeledSet, batch_iter
from .errors import ConfigError, NumericAbort
from .tensor import Tensor

METRICS_HEADER = "epoch,step,lr,lambda_eff,loss_cls,loss_D,acc_src,acc_tgt,mean_w_correct,mean_w_incorrect"

VARIANTS = ("source_only", "dann", "dann_g", "dann_fg", "cdan", "cdan_e")


def apply_variant(cfg: ExperimentConfig, variant: str) -> ExperimentConfig:
    """Named method presets over a base config. A ``@sampler`` suffix forces
    that sampler for the randomized map."""
    name, _, sampler = variant.partition("@")
    if name not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}, expected one of {VARIANTS}")
    if sampler and sampler not in C.SAMPLERS:
        raise ConfigError(f"unknown sampler {sampler!r} in variant {variant!r}")
    out = replace(cfg)
    if name == "source_only":
        out.lam = 0.0
        out.strategy = C.FEATURE_ONLY
        out.entropy = False
    elif name == "dann":
        out.strategy = C.FEATURE_ONLY
        out.entropy = False
    elif name == "dann_g":
        out.strategy = C.PREDICTION_ONLY
        out.entropy = False
    elif name == "dann_fg":
        out.strategy = C.CONCAT
        out.entropy = False
    elif name == "cdan":
        out.strategy = "auto"
        out.entropy = False
    elif name == "cdan_e":
        out.strategy = "auto"
        out.entropy = True
    if sampler:
        out.sampler = sampler
    return out.validate()


class _BatchCycler:
    """Endless deterministic batch stream; each pass reshuffles with its epoch index."""

    def __init__(self, labeled: LabeledSet, batch_size: int, seed: int):
        self.labeled = labeled
        self.batch_size = batch_size
        self.seed = seed
        self.epoch = 0
        self._iter = batch_iter(labeled, batch_size, seed, 0)

    def next(self):
        try:
            return next(self._iter)
        except StopIteration:
            self.epoch += 1
            self._iter = batch_iter(self.labeled, self.batch_size, self.seed, self.epoch)
            return next(self._iter)


def _evaluate(bundle: N.ModelBundle, labeled: LabeledSet) -> tuple[float, np.ndarray]:
    f = N.forward_F(bundle, Tensor(labeled.x))
    _, g = N.forward_G(bundle, f)
    return A.accuracy(g.data, labeled.y), g.data


def train(cfg: ExperimentConfig, seed: int, src: LabeledSet, tgt: LabeledSet
          ) -> tuple[N.ModelBundle, A.MetricsRecord, C.RandomProjection | None]:
    """The minimax loop over explicit datasets. Target labels are touched only
    by the per-epoch evaluation, never by the optimization path."""
    cfg.validate()
    if not set(range(cfg.n_classes)) <= set(src.y.tolist()):
        raise ConfigError(f"source set does not cover all {cfg.n_classes} classes")

    strategy = cfg.resolve_strategy()
    spec_f, spec_g, spec_d = cfg.model_specs(src.dim)
    bundle = N.init_model(spec_f, spec_g, spec_d, seed)
    proj = None
    if strategy.tag == C.RANDOMIZED_MULTILINEAR:
        proj = C.sample_projection(strategy.d, bundle.d_f, bundle.d_g, strategy.sampler,
                                   cfg.derived_seed(seed, _STREAM_PROJ))

    schedule = cfg.schedule()
    optimizer = opt.SgdMomentum(
        [(bundle.params_f(), cfg.lr_mult_f), (bundle.params_g(), cfg.lr_mult_g),
         (bundle.params_d(), cfg.lr_mult_d)],
        momentum=schedule.momentum,
    )
    src_batches = _BatchCycler(src, cfg.batch_size, cfg.derived_seed(seed, _STREAM_SRC_BATCHES))
    tgt_batches = _BatchCycler(tgt, cfg.batch_size, cfg.derived_seed(seed, _STREAM_TGT_BATCHES))

    steps_per_epoch = math.ceil(src.n / cfg.batch_size)
    record = A.MetricsRecord()
    for step in range(cfg.total_steps):
        p = step / cfg.total_steps
        lr = opt.lr_schedule(p, schedule)
        lambda_eff = schedule.lam * opt.lambda_schedule(p, schedule.delta)

        x_s, y_s = src_batches.next()
        x_t, _ = tgt_batches.next()
        losses = O.cdan_step_losses(x_s, y_s, x_t, bundle, strategy, proj,
                                    lambda_eff=lambda_eff, entropy_weighting=cfg.entropy)
        if not (math.isfinite(losses.classifier_loss) and math.isfinite(losses.discriminator_loss)):
            raise NumericAbort(step, f"loss_cls={losses.classifier_loss}, loss_D={losses.discriminator_loss}")
        T.backward(losses.objective)
        optimizer.step(lr)

        end_of_epoch = (step + 1) % steps_per_epoch == 0 or step == cfg.total_steps - 1
        if end_of_epoch:
            acc_src, _ = _evaluate(bundle, src)
            acc_tgt, g_tgt = _evaluate(bundle, tgt)
            mean_correct, mean_incorrect = A.entropy_correctness_report(g_tgt, tgt.y)
            record.epochs.append(A.EpochMetrics(
                epoch=step // steps_per_epoch, step=step, lr=lr, lambda_eff=lambda_eff,
                loss_cls=losses.classifier_loss, loss_d=losses.discriminator_loss,
                acc_src=acc_src, acc_tgt=acc_tgt,
                mean_w_correct=mean_correct, mean_w_incorrect=mean_incorrect,
            ))

    f_src = N.forward_F(bundle, Tensor(src.x)).data
    f_tgt = N.forward_F(bundle, Tensor(tgt.x)).data
    record.a_distance = A.proxy_a_distance(f_src, f_tgt, cfg.derived_seed(seed, _STREAM_ADIST))
    return bundle, record, proj


def run_experiment(cfg: ExperimentConfig, seed: int, out_dir) -> A.MetricsRecord:
    """Train one configuration end to end and write metrics.csv, model.txt and
    features.csv into out_dir."""
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    src, tgt = cfg.make_dataset(seed)
    bundle, record, proj = train(cfg, seed, src, tgt)

    _write_metrics(record, os.path.join(out_dir, "metrics.csv"))
    extra = {"proj.R_f": proj.r_f.data, "proj.R_g": proj.r_g.data} if proj is not None else None
    meta = {"proj.sampler": proj.sampler, "proj.seed": str(proj.seed)} if proj is not None else None
    N.save_model(bundle, os.path.join(out_dir, "model.txt"), extra_arrays=extra, meta=meta)
    A.export_features(bundle, [src, tgt], os.path.join(out_dir, "features.csv"))
    return record


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _write_metrics(record: A.MetricsRecord, path) -> None:
    with open(path, "w") as fh:
        fh.write(METRICS_HEADER + "\n")
        for m in record.epochs:
            fh.write(",".join([
                str(m.epoch), str(m.step), _fmt(m.lr), _fmt(m.lambda_eff), _fmt(m.loss_cls),
                _fmt(m.loss_d), _fmt(m.acc_src), _fmt(m.acc_tgt),
                _fmt(m.mean_w_correct), _fmt(m.mean_w_incorrect),
            ]) + "\n")


@dataclass
class CompareRow:
    variant: str
    seed: int
    acc_tgt: float
    dist_a: float


def compare(cfg: ExperimentConfig, variants: list[str], seeds: list[int], out_dir) -> list[CompareRow]:
    """Run every (variant, seed) pair into its own directory and write summary.csv."""
    if len(variants) < 2 and len(seeds) < 2:
        raise ConfigError("compare needs at least two variants or at least two seeds")
    rows: list[CompareRow] = []
    for variant in variants:
        vcfg = apply_variant(cfg, variant)
        for seed in seeds:
            run_dir = os.path.join(out_dir, variant.replace("@", "_"), f"seed_{seed}")
            record = run_experiment(vcfg, seed, run_dir)
            rows.append(CompareRow(variant, seed, record.final_target_accuracy, record.a_distance))
    _write_summary(rows, variants, os.path.join(out_dir, "summary.csv"))
    return rows


def _write_summary(rows: list[CompareRow], variants: list[str], path) -> None:
    with open(path, "w") as fh:
        fh.write("variant,seed,acc_tgt,dist_a,acc_tgt_std,dist_a_std\n")
        for row in rows:
            fh.write(f"{row.variant},{row.seed},{_fmt(row.acc_tgt)},{_fmt(row.dist_a)},,\n")
        for variant in variants:
            accs = np.array([r.acc_tgt for r in rows if r.variant == variant])
            dists = np.array([r.dist_a for r in rows if r.variant == variant])
            fh.write(f"{variant},mean,{_fmt(accs.mean())},{_fmt(dists.mean())},"
                     f"{_fmt(accs.std())},{_fmt(dists.std())}\n")


def verify_theorem1(d_list: list[int], n_resamples: int, samplers: list[str], seed: int,
                    d_f: int = 16, d_g: int = 8) -> tuple[list[A.Theorem1Result], bool]:
    """Sweep the randomized dimension and report the unbiasedness gate per row.

    Returns (results, all_gates_passed). The quadruple is a fixed unit-norm
    draw from the seed.
    """
    rng = np.random.default_rng([seed, 31])
    def unit(k):
        v = rng.standard_normal(k)
        return v / np.linalg.norm(v)
    f, f2 = unit(d_f), unit(d_f)
    g, g2 = unit(d_g), unit(d_g)
    results = []
    ok = True
    for sampler in samplers:
        for d in d_list:
            res = A.theorem1_verify(f, g, f2, g2, d=d, n_resamples=n_resamples,
                                    sampler=sampler, seed=seed)
            ok = ok and res.unbiased_within(3.0)
            results.append(res)
    return results, ok

"""Selectivity-preserving tabular GAN.

The generator's loss pairs the classic minimax term with a Q-Error term over
a range-query workload: generated batches are soft-counted inside each query
range (products of sigmoids at temperature tau) so selectivity mismatch is
differentiable and gradients flow into the generator.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from .data import Schema, Table, decode, encode, schema_from_json, schema_to_json
from .errors import CheckpointError, DataError, TrainingError
from .nn import Adam, AdamConfig, BlockLayout, DenseLayer, Network
from .workload import RangeQuery, Workload, true_selectivities

CLAMP_LO = 1e-7
CLAMP_HI = 1.0 - 1e-7

# (encoded column position, lo, hi) with bounds in normalized [0, 1] units.
NormalizedBounds = tuple[tuple[int, float, float], ...]


@dataclass(frozen=True)
class GanConfig:
    """Network shapes. Total parameter count stays at the thousand scale."""

    z_dim: int = 32
    g_hidden: tuple[int, ...] = (64, 64)
    d_hidden: tuple[int, ...] = (64, 64)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    queries_per_step: int = 64
    qerror_weight: float = 1.0
    tau: float = 0.02
    tau_final: float | None = None  # set to decay temperature linearly
    eps: float = 1e-6
    smooth_sharpness: float = 20.0
    hard_max: bool = False
    g_opt: AdamConfig = field(default_factory=AdamConfig)
    d_opt: AdamConfig = field(default_factory=AdamConfig)
    g_init_seed: int = 1
    d_init_seed: int = 2
    train_seed: int = 3

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.queries_per_step < 1:
            raise ValueError("epochs >= 0, batch_size >= 1, queries_per_step >= 1 required")
        if self.qerror_weight < 0 or self.tau <= 0 or self.eps <= 0:
            raise ValueError("qerror_weight >= 0, tau > 0, eps > 0 required")


@dataclass
class Generator:
    net: Network
    z_dim: int
    schema: Schema


@dataclass
class Discriminator:
    net: Network


@dataclass
class EpochStats:
    epoch: int
    d_loss: float
    g_adv: float
    g_qerr: float
    seconds: float


def build_generator(schema: Schema, arch: GanConfig, seed: int) -> Generator:
    rng = np.random.default_rng(seed)
    layout = BlockLayout.from_schema(schema)
    dims = [arch.z_dim, *arch.g_hidden, schema.encoded_width]
    layers = []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        layers.append(
            DenseLayer.init(
                dims[i],
                dims[i + 1],
                nn.BLOCKWISE if last else nn.RECTIFIER,
                rng,
                layout=layout if last else None,
            )
        )
    return Generator(Network(layers), arch.z_dim, schema)


def build_discriminator(schema: Schema, arch: GanConfig, seed: int) -> Discriminator:
    rng = np.random.default_rng(seed)
    dims = [schema.encoded_width, *arch.d_hidden, 1]
    layers = []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        layers.append(
            DenseLayer.init(dims[i], dims[i + 1], nn.SIGMOID if last else nn.RECTIFIER, rng)
        )
    return Discriminator(Network(layers))


def normalize_query(q: RangeQuery, schema: Schema) -> NormalizedBounds:
    """Map native-unit predicates to encoded column positions and [0,1] bounds.

    A degenerate (zero-span) column maps to the full [0,1] interval when its
    single value satisfies the predicate and to an empty interval otherwise,
    mirroring how encode() pins such columns to 0.5.
    """
    out = []
    for col, lo, hi in q.predicates:
        spec = schema.columns[col]
        if spec.kind != "numeric":
            raise DataError(f"query {q.qid}: column {spec.name!r} is not numeric")
        start = schema.block_start(col)
        if spec.span == 0:
            if lo <= spec.domain_min <= hi:
                out.append((start, 0.0, 1.0))
            else:
                out.append((start, 1.0, 0.0))
        else:
            out.append(
                (
                    start,
                    (lo - spec.domain_min) / spec.span,
                    (hi - spec.domain_min) / spec.span,
                )
            )
    return tuple(out)


def _soft_factors(batch: np.ndarray, bounds: NormalizedBounds, tau: float):
    """Per-predicate sigmoid factors and their d/dx, each (n_rows, n_preds)."""
    n = batch.shape[0]
    p = len(bounds)
    f = np.empty((n, p))
    df = np.empty((n, p))
    for k, (pos, lo, hi) in enumerate(bounds):
        x = batch[:, pos]
        s_lo = nn.sigmoid((x - lo) / tau)
        s_hi = nn.sigmoid((hi - x) / tau)
        f[:, k] = s_lo * s_hi
        df[:, k] = (s_lo * (1.0 - s_lo) * s_hi - s_lo * s_hi * (1.0 - s_hi)) / tau
    return f, df


def soft_count(batch: np.ndarray, bounds: NormalizedBounds, tau: float) -> float:
    """Differentiable expected number of rows inside the (normalized) range.

    Each row contributes the product over predicates of
    sigmoid((x - lo)/tau) * sigmoid((hi - x)/tau); as tau -> 0 this tends to
    the exact inclusive count for rows not sitting exactly on a bound.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    f, _ = _soft_factors(np.asarray(batch, dtype=float), bounds, tau)
    return float(f.prod(axis=1).sum())


def _smooth_max3(a: float, b: float, sharpness: float) -> tuple[float, float, float]:
    """Log-sum-exp relaxation of max(1, a, b) and its a/b partials."""
    vals = np.array([1.0, a, b])
    m = vals.max()
    e = np.exp(sharpness * (vals - m))
    total = e.sum()
    value = m + np.log(total) / sharpness
    return float(value), float(e[1] / total), float(e[2] / total)


def _hard_max3(a: float, b: float) -> tuple[float, float, float]:
    idx = int(np.argmax([1.0, a, b]))
    value = (1.0, a, b)[idx]
    return value, 1.0 if idx == 1 else 0.0, 1.0 if idx == 2 else 0.0


@dataclass
class GenLossResult:
    loss: float
    adv: float
    qerr: float
    grads: list[np.ndarray]


def generator_loss(
    gen: Generator,
    disc: Discriminator,
    z_batch: np.ndarray,
    bounds_list: list[NormalizedBounds],
    sel_true: np.ndarray,
    cfg: TrainConfig,
    tau: float | None = None,
) -> GenLossResult:
    """Adversarial term plus the Q-Error term, with gradients w.r.t. G.

    The generated-table selectivity of each query is estimated by a soft
    count on the generated batch itself, divided by the batch size.
    """
    if not bounds_list:
        raise TrainingError("generator loss needs a non-empty query sample")
    tau = cfg.tau if tau is None else tau
    batch = z_batch.shape[0]

    gcache = gen.net.forward(z_batch)
    x_fake = gcache.output

    # Adversarial term: mean log(1 - D(G(z))), outputs clamped before the log.
    dcache = disc.net.forward(x_fake)
    d_raw = dcache.output
    d = np.clip(d_raw, CLAMP_LO, CLAMP_HI)
    adv = float(np.mean(np.log(1.0 - d)))
    grad_d = np.where(
        (d_raw > CLAMP_LO) & (d_raw < CLAMP_HI), -1.0 / (1.0 - d) / batch, 0.0
    )
    gx = disc.net.backward(dcache, grad_d).input_grad

    # Q-Error term over the sampled queries.
    n_q = len(bounds_list)
    scale = cfg.qerror_weight / n_q
    qerr_sum = 0.0
    for bounds, st in zip(bounds_list, sel_true):
        f, df = _soft_factors(x_fake, bounds, tau)
        p = len(bounds)
        prefix = np.ones((batch, p + 1))
        for k in range(p):
            prefix[:, k + 1] = prefix[:, k] * f[:, k]
        suffix = np.ones((batch, p + 1))
        for k in reversed(range(p)):
            suffix[:, k] = suffix[:, k + 1] * f[:, k]
        sel_hat = prefix[:, p].sum() / batch

        a = (st + cfg.eps) / (sel_hat + cfg.eps)
        b = (sel_hat + cfg.eps) / (st + cfg.eps)
        if cfg.hard_max:
            value, da, db = _hard_max3(a, b)
        else:
            value, da, db = _smooth_max3(a, b, cfg.smooth_sharpness)
        qerr_sum += value
        # d value / d sel_hat, then chain through the soft count.
        dval_dsel = da * (-(st + cfg.eps) / (sel_hat + cfg.eps) ** 2) + db / (st + cfg.eps)
        coeff = scale * dval_dsel / batch
        for k, (pos, _, _) in enumerate(bounds):
            gx[:, pos] += coeff * df[:, k] * prefix[:, k] * suffix[:, k + 1]

    qerr_term = cfg.qerror_weight * qerr_sum / n_q
    loss = adv + qerr_term
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite generator loss ({loss})")
    grads = gen.net.backward(gcache, gx).params
    return GenLossResult(loss, adv, qerr_term, grads)


@dataclass
class DiscLossResult:
    loss: float
    grads: list[np.ndarray]


def discriminator_loss(
    disc: Discriminator, real_batch: np.ndarray, fake_batch: np.ndarray
) -> DiscLossResult:
    """Binary cross-entropy: -mean log D(real) - mean log(1 - D(fake))."""
    if real_batch.shape[0] == 0 or fake_batch.shape[0] == 0:
        raise TrainingError("discriminator loss needs non-empty batches")
    rcache = disc.net.forward(real_batch)
    fcache = disc.net.forward(fake_batch)
    d_real_raw, d_fake_raw = rcache.output, fcache.output
    d_real = np.clip(d_real_raw, CLAMP_LO, CLAMP_HI)
    d_fake = np.clip(d_fake_raw, CLAMP_LO, CLAMP_HI)
    loss = -float(np.mean(np.log(d_real))) - float(np.mean(np.log(1.0 - d_fake)))
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite discriminator loss ({loss})")
    grad_real = np.where(
        (d_real_raw > CLAMP_LO) & (d_real_raw < CLAMP_HI),
        -1.0 / d_real / real_batch.shape[0],
        0.0,
    )
    grad_fake = np.where(
        (d_fake_raw > CLAMP_LO) & (d_fake_raw < CLAMP_HI),
        1.0 / (1.0 - d_fake) / fake_batch.shape[0],
        0.0,
    )
    g_real = disc.net.backward(rcache, grad_real).params
    g_fake = disc.net.backward(fcache, grad_fake).params
    return DiscLossResult(loss, [a + b for a, b in zip(g_real, g_fake)])


def train(
    table: Table,
    workload: Workload,
    cfg: TrainConfig,
    arch: GanConfig = GanConfig(),
    initial: tuple[Generator, Discriminator] | None = None,
) -> tuple[Generator, Discriminator, list[EpochStats]]:
    """Alternating updates: one discriminator step on a real minibatch versus
    fresh fakes, then one generator step on fresh noise and a uniform sample
    of queries_per_step workload queries. Deterministic under the seeds."""
    if table.n_rows < cfg.batch_size:
        raise DataError(
            f"table has {table.n_rows} rows; need at least batch_size={cfg.batch_size}"
        )
    schema = table.schema
    if initial is not None:
        gen, disc = initial
    else:
        gen = build_generator(schema, arch, cfg.g_init_seed)
        disc = build_discriminator(schema, arch, cfg.d_init_seed)

    x_real = encode(table)
    sel_true = true_selectivities(workload, table)
    bounds = [normalize_query(q, schema) for q in workload.queries]

    shuffle_rng, noise_rng, query_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.train_seed).spawn(3)
    )
    g_adam = Adam(gen.net.parameters(), cfg.g_opt, [f"G.{n}" for n in gen.net.parameter_names()])
    d_adam = Adam(disc.net.parameters(), cfg.d_opt, [f"D.{n}" for n in disc.net.parameter_names()])

    steps_per_epoch = table.n_rows // cfg.batch_size
    total_steps = max(1, cfg.epochs * steps_per_epoch)
    history: list[EpochStats] = []
    step_no = 0
    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        perm = shuffle_rng.permutation(table.n_rows)
        d_losses, g_advs, g_qerrs = [], [], []
        for step in range(steps_per_epoch):
            rows = perm[step * cfg.batch_size : (step + 1) * cfg.batch_size]
            real = x_real[rows]
            try:
                z_d = noise_rng.standard_normal((cfg.batch_size, gen.z_dim))
                fake = gen.net.forward(z_d).output
                d_res = discriminator_loss(disc, real, fake)
                d_adam.step(d_res.grads)

                z_g = noise_rng.standard_normal((cfg.batch_size, gen.z_dim))
                picks = query_rng.integers(0, len(workload.queries), size=cfg.queries_per_step)
                if cfg.tau_final is None:
                    tau = cfg.tau
                else:
                    frac = step_no / max(1, total_steps - 1)
                    tau = cfg.tau + (cfg.tau_final - cfg.tau) * frac
                g_res = generator_loss(
                    gen,
                    disc,
                    z_g,
                    [bounds[i] for i in picks],
                    sel_true[picks],
                    cfg,
                    tau=tau,
                )
                g_adam.step(g_res.grads)
            except TrainingError as exc:
                raise TrainingError(
                    f"diverged at epoch {epoch}, step {step}: {exc}", history=history
                ) from exc
            d_losses.append(d_res.loss)
            g_advs.append(g_res.adv)
            g_qerrs.append(g_res.qerr)
            step_no += 1
        history.append(
            EpochStats(
                epoch,
                float(np.mean(d_losses)) if d_losses else float("nan"),
                float(np.mean(g_advs)) if g_advs else float("nan"),
                float(np.mean(g_qerrs)) if g_qerrs else float("nan"),
                time.perf_counter() - started,
            )
        )
    return gen, disc, history


def sample(gen: Generator, n: int, seed: int) -> Table:
    """Generate n records: noise through G, decoded against the schema."""
    if n < 1:
        raise ValueError("need n >= 1 rows")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, gen.z_dim))
    return decode(gen.net.forward(z).output, gen.schema)


def write_history(path, history: list[EpochStats]) -> None:
    with open(path, "w") as fh:
        fh.write("# rcgan-history-v1\n")
        for h in history:
            fh.write(
                f"epoch={h.epoch} d_loss={h.d_loss!r} g_adv={h.g_adv!r} "
                f"g_qerr={h.g_qerr!r} seconds={h.seconds:.3f}\n"
            )


CHECKPOINT_FORMAT = "rcgan-checkpoint-v1"


def _train_config_to_obj(cfg: TrainConfig) -> dict:
    return asdict(cfg)


def _train_config_from_obj(obj: dict) -> TrainConfig:
    obj = dict(obj)
    obj["g_opt"] = AdamConfig(**obj["g_opt"])
    obj["d_opt"] = AdamConfig(**obj["d_opt"])
    return TrainConfig(**obj)


def save_checkpoint(
    gen: Generator,
    disc: Discriminator,
    cfg: TrainConfig,
    path,
    arch: GanConfig = GanConfig(),
    meta: dict | None = None,
) -> None:
    for p in [*gen.net.parameters(), *disc.net.parameters()]:
        if not np.all(np.isfinite(p)):
            raise CheckpointError("refusing to save non-finite parameters")
    with open(path, "w") as fh:
        fh.write(f"{CHECKPOINT_FORMAT}\n")
        fh.write("schema " + json.dumps(json.loads(schema_to_json(gen.schema))) + "\n")
        fh.write(f"schema_hash {gen.schema.digest()}\n")
        fh.write("arch " + json.dumps(asdict(arch)) + "\n")
        fh.write("config " + json.dumps(_train_config_to_obj(cfg)) + "\n")
        fh.write("meta " + json.dumps(meta or {}) + "\n")
        fh.write("section generator\n")
        nn.write_network(fh, gen.net)
        fh.write("section discriminator\n")
        nn.write_network(fh, disc.net)
        fh.write("end\n")


@dataclass
class Checkpoint:
    generator: Generator
    discriminator: Discriminator
    config: TrainConfig
    arch: GanConfig
    meta: dict


def load_checkpoint(path) -> Checkpoint:
    with open(path) as fh:
        reader = nn._LineReader(fh)
        tag = reader.next("format tag")
        if tag != CHECKPOINT_FORMAT:
            raise CheckpointError(f"expected {CHECKPOINT_FORMAT!r}, got {tag!r}")

        def keyed(key: str) -> str:
            line = reader.next(key)
            if not line.startswith(key + " "):
                raise CheckpointError(f"expected {key!r} line, got {line!r}")
            return line[len(key) + 1 :]

        try:
            schema = schema_from_json(keyed("schema"), source=str(path))
            stored_hash = keyed("schema_hash")
            arch = GanConfig(**_tupled(json.loads(keyed("arch"))))
            cfg = _train_config_from_obj(json.loads(keyed("config")))
            meta = json.loads(keyed("meta"))
        except (json.JSONDecodeError, TypeError, KeyError) as exc:
            raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
        if stored_hash != schema.digest():
            raise CheckpointError("schema hash does not match the embedded schema")
        if reader.next("generator section") != "section generator":
            raise CheckpointError("missing generator section")
        g_net = nn.read_network(fh)
        if reader.next("discriminator section") != "section discriminator":
            raise CheckpointError("missing discriminator section")
        d_net = nn.read_network(fh)
        if reader.next("end marker") != "end":
            raise CheckpointError("missing end marker")
    if g_net.out_dim != schema.encoded_width:
        raise CheckpointError("generator output width does not match the schema")
    return Checkpoint(Generator(g_net, arch.z_dim, schema), Discriminator(d_net), cfg, arch, meta)


def _tupled(obj: dict) -> dict:
    out = dict(obj)
    for key in ("g_hidden", "d_hidden"):
        if key in out:
            out[key] = tuple(out[key])
    return out

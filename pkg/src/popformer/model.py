"""Population-to-population transformer.

A fully evaluated parent population is embedded row-per-solution: the
normalized decision vector is zero-padded to a fixed maximum dimension and
linearly projected, and a projection of the min-max normalized objective
vector is added on top so each token carries its position in objective space.
The encoder reads the parent sequence; the decoder autoregressively emits
offspring, cross-attending layer-for-layer into the encoder outputs, and a
linear head squashed through a logistic maps each position back into the
unit box (denormalized to problem bounds).

One model instance serves every problem whose dimensions fit its capacity.
"""
from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .core import (
    EvaluationBudget,
    Population,
    Problem,
    ProblemSpec,
    Solution,
    denormalize_decision,
    evaluate,
    normalize_decision,
)
from .dataset import minmax_normalize_objectives
from .errors import BudgetExhausted, CapacityError, CheckpointError, ConfigError, DataError
from .nn import (
    Adam,
    AttentionParams,
    MlpParams,
    NormParams,
    Tape,
    attention_params,
    causal_mask,
    const,
    layer_norm,
    linear,
    logistic,
    matmul,
    mlp_block,
    mlp_params,
    mul,
    multi_head_attention,
    norm_params,
    scale,
    softmax,
    sub,
    sum_all,
    uniform_linear,
)
from .nn.tensor import Tensor

CHECKPOINT_MAGIC = b"PETM"
CHECKPOINT_VERSION = 1

HEAD_MODES = ("logistic", "softmax")


@dataclass(frozen=True)
class ModelConfig:
    """Capacity and architecture knobs; defaults are desk-scale."""

    d_hat: int = 128      # padded decision width the head also predicts
    m_hat: int = 10       # padded objective width
    width: int = 64       # model width
    layers: int = 2
    heads: int = 4
    max_seq: int = 100    # largest population the model accepts
    head_mode: str = "logistic"

    def __post_init__(self):
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.width % self.heads != 0:
            raise ConfigError(f"width {self.width} must be divisible by heads {self.heads}")
        if min(self.d_hat, self.m_hat, self.width, self.heads, self.max_seq) < 1:
            raise ConfigError("all capacity fields must be positive")
        if self.head_mode not in HEAD_MODES:
            raise ConfigError(f"head_mode must be one of {HEAD_MODES}")

    @property
    def hidden(self) -> int:
        return 4 * self.width

    def param_count(self) -> int:
        """Closed-form parameter count; verified against the live model in tests."""
        d, w, h = self.d_hat, self.width, self.hidden
        attn = 4 * (w * w + w)
        norm = 2 * w
        mlp = w * h + h + h * w + w
        encoder_layer = norm + attn + norm + mlp
        decoder_layer = norm + attn + attn + norm + mlp
        return (self.d_hat * w + self.m_hat * w
                + self.layers * (encoder_layer + decoder_layer)
                + w * d + d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad model config JSON: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown model config fields: {sorted(unknown)}")
        return cls(**payload)


@dataclass
class EncoderBlock:
    ln_attn: NormParams
    attn: AttentionParams
    ln_mlp: NormParams
    mlp: MlpParams


@dataclass
class DecoderBlock:
    ln_self: NormParams
    self_attn: AttentionParams
    cross_attn: AttentionParams
    ln_mlp: NormParams
    mlp: MlpParams


@dataclass
class GenerationResult:
    population: Population
    exhausted: bool


@dataclass
class EncodedParents:
    """Per-layer encoder outputs plus the parent generation's objective frame.

    Decoder contexts are normalized against this frame rather than their own
    min-max: position k's embedding then never depends on later context
    members, which keeps autoregressive decoding exactly causal.
    """

    memories: list[Tensor]
    obj_low: np.ndarray
    obj_span: np.ndarray


def _objective_frame(pop: Population) -> tuple[np.ndarray, np.ndarray]:
    objs = pop.objectives()
    low = objs.min(axis=0)
    span = objs.max(axis=0) - low
    return low, span


def _norm_param_list(prefix: str, p: NormParams):
    return [(f"{prefix}.gain", p.gain), (f"{prefix}.bias", p.bias)]


def _linear_param_list(prefix: str, p):
    return [(f"{prefix}.w", p.w), (f"{prefix}.b", p.b)]


def _attn_param_list(prefix: str, p: AttentionParams):
    out = []
    for name, lin in (("q", p.q), ("k", p.k), ("v", p.v), ("out", p.out)):
        out += _linear_param_list(f"{prefix}.{name}", lin)
    return out


def _mlp_param_list(prefix: str, p: MlpParams):
    return _linear_param_list(f"{prefix}.inner", p.inner) + \
        _linear_param_list(f"{prefix}.outer", p.outer)


class PopulationTransformer:
    """Encoder-decoder model that maps a parent population to offspring."""

    def __init__(self, config: ModelConfig = ModelConfig(), seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        w = config.width
        self.e_dim = uniform_linear(rng, config.d_hat, w).w
        self.e_obj = uniform_linear(rng, config.m_hat, w).w
        self.encoder = [
            EncoderBlock(norm_params(w), attention_params(rng, w),
                         norm_params(w), mlp_params(rng, w, config.hidden))
            for _ in range(config.layers)
        ]
        self.decoder = [
            DecoderBlock(norm_params(w), attention_params(rng, w),
                         attention_params(rng, w),
                         norm_params(w), mlp_params(rng, w, config.hidden))
            for _ in range(config.layers)
        ]
        self.head = uniform_linear(rng, w, config.d_hat)
        self.optimizer: Adam | None = None

    # -- parameter plumbing -------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = [("e_dim", self.e_dim), ("e_obj", self.e_obj)]
        for i, blk in enumerate(self.encoder):
            out += _norm_param_list(f"encoder.{i}.ln_attn", blk.ln_attn)
            out += _attn_param_list(f"encoder.{i}.attn", blk.attn)
            out += _norm_param_list(f"encoder.{i}.ln_mlp", blk.ln_mlp)
            out += _mlp_param_list(f"encoder.{i}.mlp", blk.mlp)
        for i, blk in enumerate(self.decoder):
            out += _norm_param_list(f"decoder.{i}.ln_self", blk.ln_self)
            out += _attn_param_list(f"decoder.{i}.self_attn", blk.self_attn)
            out += _attn_param_list(f"decoder.{i}.cross_attn", blk.cross_attn)
            out += _norm_param_list(f"decoder.{i}.ln_mlp", blk.ln_mlp)
            out += _mlp_param_list(f"decoder.{i}.mlp", blk.mlp)
        out += _linear_param_list("head", self.head)
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def copy(self) -> "PopulationTransformer":
        clone = PopulationTransformer(self.config, seed=0)
        for (_, src), (_, dst) in zip(self.named_parameters(), clone.named_parameters()):
            dst.data = src.data.copy()
        return clone

    # -- embedding ----------------------------------------------------------

    def _check_capacity(self, n: int, d: int | None = None, m: int | None = None) -> None:
        cfg = self.config
        if d is not None and d > cfg.d_hat:
            raise CapacityError(f"decision dimension {d} exceeds capacity {cfg.d_hat}")
        if m is not None and m > cfg.m_hat:
            raise CapacityError(f"objective count {m} exceeds capacity {cfg.m_hat}")
        if n > cfg.max_seq:
            raise CapacityError(f"population size {n} exceeds capacity {cfg.max_seq}")

    def embed_decisions(self, pop: Population, spec: ProblemSpec) -> Tensor:
        """Zero-pad normalized decisions to d_hat and project to model width."""
        n = len(pop)
        self._check_capacity(n, d=spec.d)
        padded = np.zeros((n, self.config.d_hat))
        for i, s in enumerate(pop.members):
            padded[i, :spec.d] = normalize_decision(s.x, spec)
        return matmul(const(padded), self.e_dim)

    def embed_objectives(self, pop: Population,
                         frame: tuple[np.ndarray, np.ndarray] | None = None) -> Tensor:
        """Min-max normalized objectives, padded to m_hat and projected.

        Without a frame the population normalizes against its own per-column
        min-max (zero ranges map to 0.5). With a frame (a parent generation's
        low/span) values normalize against that frame and are clipped to a
        generous window so outlier offspring cannot blow up activations.
        """
        if not pop.all_evaluated:
            raise DataError("objective embedding requires a fully evaluated population")
        objs = pop.objectives()
        n, m = objs.shape
        self._check_capacity(n, m=m)
        if frame is None:
            normed = minmax_normalize_objectives(objs)
        else:
            low, span = frame
            normed = np.full_like(objs, 0.5)
            ok = span > 0
            normed[:, ok] = (objs[:, ok] - low[ok]) / span[ok]
            normed = np.clip(normed, -1.0, 2.0)
        padded = np.zeros((n, self.config.m_hat))
        padded[:, :m] = normed
        return matmul(const(padded), self.e_obj)

    def embed(self, pop: Population, spec: ProblemSpec,
              frame: tuple[np.ndarray, np.ndarray] | None = None) -> Tensor:
        """Token sequence: decision embedding plus objective encoding, row per member."""
        return self.embed_decisions(pop, spec) + self.embed_objectives(pop, frame=frame)

    # -- encoder / decoder --------------------------------------------------

    def encode_layers(self, z: Tensor) -> list[Tensor]:
        """All per-layer encoder outputs; the decoder cross-attends layer-for-layer."""
        outputs = []
        heads = self.config.heads
        for blk in self.encoder:
            normed = layer_norm(z, blk.ln_attn)
            zp = multi_head_attention(normed, normed, normed, blk.attn, heads) + z
            z = mlp_block(layer_norm(zp, blk.ln_mlp), blk.mlp) + zp
            outputs.append(z)
        return outputs

    def encode(self, z: Tensor) -> Tensor:
        return self.encode_layers(z)[-1]

    def encode_parents(self, parents: Population, spec: ProblemSpec) -> EncodedParents:
        """Run the encoder once; the result conditions every decode step."""
        if not parents.all_evaluated:
            raise DataError("encoding requires an evaluated parent population")
        low, span = _objective_frame(parents)
        memories = self.encode_layers(self.embed(parents, spec))
        return EncodedParents(memories=memories, obj_low=low, obj_span=span)

    def decode(self, y: Tensor, memories: list[Tensor]) -> Tensor:
        """Masked self-attention, cross-attention into the encoder, then MLP.

        The cross block queries with the self-attention output and adds no
        normalization of its own; the MLP reads LN(cross + self) and the
        residual carries the cross output.
        """
        if len(memories) != len(self.decoder):
            raise ConfigError(
                f"need one encoder memory per decoder layer ({len(self.decoder)}), got {len(memories)}"
            )
        mask = causal_mask(y.shape[0])
        heads = self.config.heads
        for blk, memory in zip(self.decoder, memories):
            normed = layer_norm(y, blk.ln_self)
            yp = multi_head_attention(normed, normed, normed, blk.self_attn, heads, mask=mask) + y
            cross = multi_head_attention(yp, memory, memory, blk.cross_attn, heads)
            y = mlp_block(layer_norm(cross + yp, blk.ln_mlp), blk.mlp) + cross
        return y

    def head_activations(self, y: Tensor) -> Tensor:
        """Per-position unit-box outputs of width d_hat."""
        logits = linear(y, self.head)
        if self.config.head_mode == "softmax":
            return softmax(logits)
        return logistic(logits)

    # -- inference ----------------------------------------------------------

    def decode_step(self, context: Population, encoded: EncodedParents,
                    spec: ProblemSpec) -> np.ndarray:
        """Next decision vector given the generated-so-far context.

        The context must be non-empty and evaluated; the first d head outputs
        of the last position are denormalized to the problem bounds.
        """
        if len(context) == 0:
            raise DataError("decode_step needs a non-empty context")
        frame = (encoded.obj_low, encoded.obj_span)
        y = self.decode(self.embed(context, spec, frame=frame), encoded.memories)
        unit = self.head_activations(y).data[-1, :spec.d]
        return denormalize_decision(unit, spec)

    def generate(self, parents: Population, problem: Problem, budget: EvaluationBudget,
                 rng: np.random.Generator, n_offspring: int | None = None) -> GenerationResult:
        """Autoregressively produce an offspring population.

        The context is seeded with one uniform-random evaluated solution that
        both consumes budget and counts as the first offspring; decoding then
        alternates propose / evaluate / append until the target size or the
        budget runs out (the result flags exhaustion and may be short).
        """
        if not parents.all_evaluated:
            raise DataError("generation requires evaluated parents")
        spec = problem.spec
        n_target = min(n_offspring or len(parents), self.config.max_seq)
        encoded = self.encode_parents(parents, spec)
        init = Solution(x=rng.uniform(spec.lower, spec.upper))
        try:
            seeded = evaluate(Population((init,)), problem, budget)
        except BudgetExhausted as exc:
            raise BudgetExhausted(
                "no budget for the initialization token", performed=0,
                population=Population((), parents.generation_index + 1),
            ) from exc
        members = list(seeded.members)
        exhausted = False
        while len(members) < n_target:
            context = Population(tuple(members), parents.generation_index + 1)
            x_next = self.decode_step(context, encoded, spec)
            try:
                child = evaluate(Population((Solution(x=x_next),)), problem, budget)
            except BudgetExhausted:
                exhausted = True
                break
            members.append(child.members[0])
        return GenerationResult(
            population=Population(tuple(members), parents.generation_index + 1),
            exhausted=exhausted,
        )

    # -- training -----------------------------------------------------------

    def forced_loss(self, parents: Population, targets: Population,
                    spec: ProblemSpec) -> Tensor:
        """Scalar MSE of the decoder's next-solution predictions.

        The decoder consumes the target sequence without its last element (its
        first element plays the initialization-token role, matching
        generation); position k predicts target k+1. Only the first d head
        outputs enter the loss; padded components are masked away.
        """
        if len(targets) < 2:
            raise DataError("teacher forcing needs a target population of size >= 2")
        if parents[0].x.size != targets[0].x.size or parents[0].f.size != targets[0].f.size:
            raise DataError("parent and target populations disagree in (d, m)")
        encoded = self.encode_parents(parents, spec)
        frame = (encoded.obj_low, encoded.obj_span)
        context = Population(targets.members[:-1], targets.generation_index)
        y = self.decode(self.embed(context, spec, frame=frame), encoded.memories)
        pred = self.head_activations(y)  # (T-1, d_hat)
        goal = np.zeros((len(targets) - 1, self.config.d_hat))
        for i, s in enumerate(targets.members[1:]):
            goal[i, :spec.d] = normalize_decision(s.x, spec)
        mask = np.zeros(self.config.d_hat)
        mask[:spec.d] = 1.0
        diff = sub(pred, const(goal))
        masked_sq = mul(mul(diff, diff), const(mask))
        return scale(sum_all(masked_sq), 1.0 / ((len(targets) - 1) * spec.d))


def teacher_forced_loss(model: PopulationTransformer, parents: Population,
                        targets: Population, spec: ProblemSpec) -> float:
    """Run one forward/backward pass; gradients accumulate on the model."""
    with Tape() as tape:
        loss = model.forced_loss(parents, targets, spec)
    tape.backward(loss)
    return loss.item()


# -- checkpoint io ----------------------------------------------------------

def save_checkpoint(model: PopulationTransformer, path) -> None:
    """Binary format: magic, u32 version, length-prefixed config JSON, then
    every parameter in declaration order as u32 rank, u32 extents, f64 data."""
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<I", CHECKPOINT_VERSION)
    cfg = model.config.to_json().encode("utf-8")
    blob += struct.pack("<I", len(cfg))
    blob += cfg
    for _, p in model.named_parameters():
        blob += struct.pack("<I", p.data.ndim)
        for extent in p.data.shape:
            blob += struct.pack("<I", extent)
        blob += p.data.astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(blob)


def load_checkpoint(path, expect_config: ModelConfig | None = None) -> PopulationTransformer:
    with open(path, "rb") as fh:
        blob = fh.read()
    view = memoryview(blob)
    offset = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal offset
        if offset + n > len(view):
            raise CheckpointError(f"{path}: truncated while reading {what}")
        chunk = view[offset:offset + n]
        offset += n
        return chunk

    if bytes(take(4, "magic")) != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes")
    (version,) = struct.unpack("<I", take(4, "version"))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (cfg_len,) = struct.unpack("<I", take(4, "config length"))
    config = ModelConfig.from_json(bytes(take(cfg_len, "config")).decode("utf-8"))
    if expect_config is not None and config != expect_config:
        raise CheckpointError(f"{path}: checkpoint config differs from the requested config")
    model = PopulationTransformer(config, seed=0)
    for name, p in model.named_parameters():
        (ndim,) = struct.unpack("<I", take(4, f"{name} rank"))
        shape = tuple(struct.unpack("<I", take(4, f"{name} extent"))[0] for _ in range(ndim))
        if shape != p.data.shape:
            raise CheckpointError(
                f"{path}: parameter {name} has shape {shape}, expected {p.data.shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        raw = take(8 * count, f"{name} data")
        p.data = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)
    if offset != len(view):
        raise CheckpointError(f"{path}: {len(view) - offset} trailing bytes after parameters")
    return model

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from cohesion_algos.autograd import Tensor, as_tensor, no_grad
from cohesion_algos.autograd import functional as F
from cohesion_algos.errors import ConfigurationError, DimensionError, EmotionIndexError
from cohesion_algos.labels import EMOTIONS
from cohesion_algos.models.base import ModelBase
from cohesion_algos.modules import Activation, Conv2d, Dense, Module, Parameter, Sequential
from cohesion_algos.modules.init import fan_in_init

NUM_EMOTIONS = len(EMOTIONS)


@dataclass(frozen=True)
class CapsuleLayerConfig:
    num_lower: int
    lower_dim: int
    num_upper: int
    upper_dim: int
    routing_iterations: int = 3

    def __post_init__(self):
        for name in ("num_lower", "lower_dim", "num_upper", "upper_dim"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.routing_iterations < 1:
            raise ConfigurationError(
                f"routing_iterations must be >= 1, got {self.routing_iterations}"
            )


@dataclass(frozen=True)
class CapsNetConfig:
    """Desk-scale capsule network for 7-class face emotion recognition.

    The front-end is one valid convolution followed by a strided convolution whose
    channels are grouped into ``primary_channels`` capsules of ``primary_dim`` per location.
    """

    input_size: Tuple[int, int] = (28, 28)
    conv_channels: int = 32
    conv_kernel: int = 9
    primary_channels: int = 32
    primary_dim: int = 4
    primary_kernel: int = 9
    primary_stride: int = 2
    emotion_dim: int = 8
    routing_iterations: int = 3
    decoder_widths: Tuple[int, ...] = (128, 256)
    m_plus: float = 0.9
    m_minus: float = 0.1
    lambda_down: float = 0.5
    recon_weight: float = 0.0005
    activation: str = "relu"
    emotions: Tuple[str, ...] = field(default=EMOTIONS)

    def __post_init__(self):
        object.__setattr__(self, "input_size", tuple(int(s) for s in self.input_size))
        object.__setattr__(self, "decoder_widths", tuple(int(w) for w in self.decoder_widths))
        object.__setattr__(self, "emotions", tuple(self.emotions))
        if self.emotions != EMOTIONS:
            raise ConfigurationError(f"emotion capsules must be ordered as {EMOTIONS}")
        if self.activation not in ("relu", "swish"):
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if not (0 <= self.m_minus < self.m_plus <= 1):
            raise ConfigurationError("margins need 0 <= m_minus < m_plus <= 1")
        if min(self.primary_grid) < 1:
            raise ConfigurationError(
                f"input {self.input_size} is too small for the convolutional front-end"
            )
        # validates the remaining counts
        self.capsule_layer

    @classmethod
    def reference_scale(cls, **kwargs) -> "CapsNetConfig":
        """256 conv channels, 32x6x6 primary capsules of dimension 8, 512-1024 decoder."""
        return cls(primary_dim=8, conv_channels=256, decoder_widths=(512, 1024), **kwargs)

    @property
    def conv_extent(self) -> Tuple[int, int]:
        return tuple(s - self.conv_kernel + 1 for s in self.input_size)

    @property
    def primary_grid(self) -> Tuple[int, int]:
        return tuple(
            (extent - self.primary_kernel) // self.primary_stride + 1 if extent > 0 else 0
            for extent in self.conv_extent
        )

    @property
    def num_primary(self) -> int:
        oh, ow = self.primary_grid
        return self.primary_channels * oh * ow

    @property
    def capsule_layer(self) -> CapsuleLayerConfig:
        return CapsuleLayerConfig(
            num_lower=self.num_primary,
            lower_dim=self.primary_dim,
            num_upper=NUM_EMOTIONS,
            upper_dim=self.emotion_dim,
            routing_iterations=self.routing_iterations,
        )


@dataclass
class RoutingState:
    logits: np.ndarray
    couplings: np.ndarray


def squash(s, axis: int = -1) -> Tensor:
    """``s * |s| / (1 + |s|^2)``: keeps the direction and maps the norm into [0, 1)."""
    s = as_tensor(s)
    norm = F.l2_norm(s, axis=axis, keepdims=True)
    return s * (norm / (1 + F.square(norm)))


def dynamic_routing(
    u_hat, iterations: int = 3, return_states: bool = False
) -> Union[Tensor, Tuple[Tensor, List[RoutingState]]]:
    """Routing by agreement.

    ``u_hat`` holds the predictions of every lower capsule for every upper capsule,
    shaped (batch, num_lower, num_upper, upper_dim) or unbatched (num_lower, num_upper,
    upper_dim). Returns the squashed upper capsules (batch, num_upper, upper_dim).
    """
    if iterations < 1:
        raise ConfigurationError(f"routing needs at least one iteration, got {iterations}")
    u_hat = as_tensor(u_hat)
    unbatched = u_hat.ndim == 3
    if unbatched:
        u_hat = u_hat.reshape((1,) + u_hat.shape)
    if u_hat.ndim != 4:
        raise DimensionError("predictions must be (batch, lower, upper, dim)", u_hat.shape)
    b, num_lower, num_upper, dim = u_hat.shape

    logits = Tensor(np.zeros((b, num_lower, num_upper), dtype=u_hat.dtype))
    states: List[RoutingState] = []
    for i in range(iterations):
        couplings = F.softmax(logits, axis=-1)
        states.append(RoutingState(logits=logits.data.copy(), couplings=couplings.data.copy()))
        s = F.sum(couplings.reshape(b, num_lower, num_upper, 1) * u_hat, axis=1)
        v = squash(s)
        if i < iterations - 1:
            logits = logits + F.sum(u_hat * v.reshape(b, 1, num_upper, dim), axis=-1)

    if unbatched:
        v = v.reshape(num_upper, dim)
    if return_states:
        return v, states
    return v


def _targets(target, batch: int) -> np.ndarray:
    target = np.atleast_1d(np.asarray(target))
    if target.shape != (batch,) or not np.issubdtype(target.dtype, np.integer):
        raise EmotionIndexError(f"expected {batch} integer class indices, got {target!r}")
    if np.any((target < 0) | (target >= NUM_EMOTIONS)):
        raise EmotionIndexError(f"emotion index out of [0, {NUM_EMOTIONS - 1}]: {target}")
    return target


def margin_loss(
    lengths,
    target,
    m_plus: float = 0.9,
    m_minus: float = 0.1,
    lambda_down: float = 0.5,
) -> Tensor:
    """Sum over classes of the two squared hinges, averaged over the batch."""
    lengths = as_tensor(lengths)
    if lengths.ndim == 1:
        lengths = lengths.reshape(1, -1)
    if lengths.shape[-1] != NUM_EMOTIONS:
        raise DimensionError(f"expected {NUM_EMOTIONS} capsule lengths", lengths.shape)
    target = _targets(target, lengths.shape[0])
    present = np.eye(NUM_EMOTIONS, dtype=lengths.dtype)[target]

    hit = F.square(F.relu(m_plus - lengths))
    miss = F.square(F.relu(lengths - m_minus))
    per_sample = F.sum(present * hit + lambda_down * (1 - present) * miss, axis=-1)
    return F.mean(per_sample)


def reconstruction_loss(decoded, original, recon_weight: float = 0.0005) -> Tensor:
    decoded, original = as_tensor(decoded), as_tensor(original)
    if decoded.shape != original.shape:
        raise DimensionError(
            "reconstruction and input differ in shape", decoded.shape, original.shape
        )
    batch = decoded.shape[0] if decoded.ndim >= 2 else 1
    return recon_weight * F.sum(F.square(decoded - original)) / batch


class CapsuleLayer(Module):
    """Fully connected capsule layer: per-pair transforms followed by dynamic routing."""

    def __init__(self, config: CapsuleLayerConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.config = config
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = Parameter(
            fan_in_init(
                (config.num_lower, config.lower_dim, config.num_upper * config.upper_dim),
                config.num_lower * config.lower_dim,
                rng,
            )
        )

    def predictions(self, u: Tensor) -> Tensor:
        """(b, num_lower, lower_dim) -> u_hat (b, num_lower, num_upper, upper_dim)"""
        c = self.config
        b = u.shape[0]
        if u.shape[1:] != (c.num_lower, c.lower_dim):
            raise DimensionError(
                "lower capsules do not match the layer", u.shape, self.weight.shape
            )
        u_hat = F.matmul(u.transpose(1, 0, 2), self.weight)  # (L, b, U*D)
        return u_hat.reshape(c.num_lower, b, c.num_upper, c.upper_dim).transpose(1, 0, 2, 3)

    def forward(self, u: Tensor, return_states: bool = False):
        return dynamic_routing(
            self.predictions(u), self.config.routing_iterations, return_states=return_states
        )


class CapsNet(ModelBase):
    """Capsule network mapping grayscale face crops to 7 emotion capsules."""

    kind = "capsnet"

    def __init__(self, config: CapsNetConfig = CapsNetConfig(), seed: int = 0):
        super().__init__()
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        c = config
        self.conv = Conv2d(1, c.conv_channels, c.conv_kernel, rng=rng)
        self.activation = Activation(c.activation)
        self.primary = Conv2d(
            c.conv_channels,
            c.primary_channels * c.primary_dim,
            c.primary_kernel,
            stride=c.primary_stride,
            rng=rng,
        )
        self.emotion_caps = CapsuleLayer(c.capsule_layer, rng=rng)

        widths = (NUM_EMOTIONS * c.emotion_dim,) + c.decoder_widths
        layers: List[Module] = []
        for w_in, w_out in zip(widths[:-1], widths[1:]):
            layers += [Dense(w_in, w_out, rng=rng), Activation(c.activation)]
        layers += [Dense(widths[-1], c.input_size[0] * c.input_size[1], rng=rng)]
        layers += [Activation("sigmoid")]
        self.decoder = Sequential(*layers)

    @property
    def architecture(self) -> Dict:
        return {"kind": self.kind, "config": self._asdict(self.config)}

    @classmethod
    def from_architecture(cls, architecture: Dict) -> "CapsNet":
        return cls(CapsNetConfig(**architecture["config"]))

    def _faces(self, faces) -> Tensor:
        faces = as_tensor(faces, dtype=self.conv.weight.dtype)
        h, w = self.config.input_size
        if faces.ndim == 2:
            faces = faces.reshape(1, 1, h, w) if faces.shape == (h, w) else faces
        elif faces.ndim == 3:
            faces = faces.reshape(faces.shape[0], 1, *faces.shape[1:])
        if faces.ndim != 4 or faces.shape[1:] != (1, h, w):
            raise DimensionError(f"faces must be grayscale {h}x{w} crops", faces.shape)
        return faces

    def primary_capsules(self, faces: Tensor) -> Tensor:
        c = self.config
        x = self.activation(self.conv(faces))
        x = self.primary(x)  # (b, channels * dim, p, q)
        b, _, p, q = x.shape
        x = x.reshape(b, c.primary_channels, c.primary_dim, p, q).transpose(0, 1, 3, 4, 2)
        return squash(x.reshape(b, c.primary_channels * p * q, c.primary_dim))

    def forward(self, faces, return_states: bool = False):
        """(b, h, w) crops in [0, 1] -> emotion capsules (b, 7, emotion_dim)."""
        return self.emotion_caps(self.primary_capsules(self._faces(faces)), return_states)

    def capsule_lengths(self, faces) -> Tensor:
        return F.l2_norm(self.forward(faces), axis=-1)

    def saliency_score(self, faces) -> Tensor:
        """Length of the winning emotion capsule, summed over the batch."""
        lengths = self.capsule_lengths(faces)
        winner = np.eye(NUM_EMOTIONS, dtype=lengths.dtype)[np.argmax(lengths.data, axis=-1)]
        return F.sum(lengths * winner)

    def predict_emotions(self, faces) -> np.ndarray:
        """Capsule lengths normalised to sum to one, (b, 7)."""
        with no_grad(), self.eval_mode():
            lengths = self.capsule_lengths(faces).data.astype(np.float64)
        total = lengths.sum(axis=-1, keepdims=True)
        uniform = np.full_like(lengths, 1.0 / NUM_EMOTIONS)
        return np.where(total > 0, lengths / np.where(total > 0, total, 1), uniform)

    def decode(self, capsules: Tensor, targets: Optional[Sequence[int]] = None) -> Tensor:
        """Reconstruct from the capsule of ``targets`` (argmax length when omitted)."""
        b = capsules.shape[0]
        if targets is None:
            targets = np.argmax(F.l2_norm(capsules, axis=-1).data, axis=-1)
        targets = _targets(targets, b)
        mask = np.eye(NUM_EMOTIONS, dtype=capsules.dtype)[targets][:, :, None]
        return self.decoder((capsules * mask).reshape(b, -1))

    def reconstruct(self, faces, targets: Optional[Sequence[int]] = None) -> np.ndarray:
        with no_grad():
            decoded = self.decode(self.forward(faces), targets)
        h, w = self.config.input_size
        return decoded.data.reshape(-1, h, w)

    def loss(self, faces, targets) -> Tuple[Tensor, Tensor, Tensor]:
        """(total, margin, reconstruction) for a batch of faces and emotion indices."""
        c = self.config
        faces = self._faces(faces)
        capsules = self.forward(faces)
        lengths = F.l2_norm(capsules, axis=-1)
        margin = margin_loss(lengths, targets, c.m_plus, c.m_minus, c.lambda_down)
        # the true class drives the decoder while training, the argmax at inference
        decoded = self.decode(capsules, targets if self.training else None)
        recon = reconstruction_loss(decoded, faces.reshape(faces.shape[0], -1), c.recon_weight)
        return margin + recon, margin, recon

    def compute_loss(self, batch) -> Tuple[Tensor, Dict[str, float]]:
        total, margin, recon = self.loss(batch["faces"], batch["emotion"])
        return total, {"margin_loss": margin.item(), "reconstruction_loss": recon.item()}

    def predict(self, batch) -> Dict[str, np.ndarray]:
        return {"emotion": self.predict_emotions(batch["faces"])}

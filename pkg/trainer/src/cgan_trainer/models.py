"""U-Net generator and patch discriminator for occupancy-to-manifold translation.

The generator halves the N x N input once with a strided convolution, runs
encoder blocks (conv / LeakyReLU / BatchNorm) down to a 1 x 1 bottleneck, and
mirrors back up with decoder blocks (ReLU / deconv / BatchNorm), concatenating
the encoder feature of matching size onto each decoder input. The last decoder
swaps BatchNorm for g(x) = (1 + tanh(x))/2 so outputs land in [0, 1]. The
discriminator scores local patches of (condition, candidate) pairs and averages
the patch probabilities into one scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

LEAKY_SLOPE = 0.2
KERNEL = 4
STRIDE = 2


def _norm(width: int) -> nn.InstanceNorm2d:
    # per-sample feature statistics in training AND inference; batch-coupled
    # statistics leave a large train/predict gap at translation batch sizes
    return nn.InstanceNorm2d(width, affine=True)


def _halvings_to_one(size: int) -> int:
    n = 0
    while size > 1:
        if size % 2:
            raise ValueError(f"spatial size {size} is not a power of two")
        size //= 2
        n += 1
    return n


@dataclass(frozen=True)
class GeneratorSpec:
    """Input grid size and channel width; depth follows from the 1x1 bottleneck.

    The default width matches the full-scale setting; desk-scale runs pass 64.
    """

    n_cells: int
    width: int = 512

    def __post_init__(self):
        if self.n_cells < 16 or (self.n_cells & (self.n_cells - 1)) != 0:
            raise ValueError(f"n_cells must be a power of two >= 16, got {self.n_cells}")
        if self.width < 1:
            raise ValueError(f"width must be positive, got {self.width}")

    @property
    def depth(self) -> int:
        # encoder count after the initial halving layer; N=256 -> 7
        return _halvings_to_one(self.n_cells // 2)


@dataclass(frozen=True)
class DiscriminatorSpec:
    n_cells: int
    width: int = 512
    n_encoders: int = 2

    def __post_init__(self):
        if self.n_cells < 16 or (self.n_cells & (self.n_cells - 1)) != 0:
            raise ValueError(f"n_cells must be a power of two >= 16, got {self.n_cells}")
        # stem plus encoders must leave at least a 4x4 map for the patch conv
        if self.n_cells // 2 // 2 ** (1 + self.n_encoders) < 4:
            raise ValueError(f"n_encoders={self.n_encoders} collapses a {self.n_cells} grid")


def output_activation(x: torch.Tensor) -> torch.Tensor:
    return (1.0 + torch.tanh(x)) * 0.5


class Generator(nn.Module):
    def __init__(self, spec: GeneratorSpec):
        super().__init__()
        self.spec = spec
        w = spec.width
        self.initial = nn.Conv2d(1, w, KERNEL, STRIDE, 1)
        encoders = []
        for i in range(spec.depth):
            block = [nn.Conv2d(w, w, KERNEL, STRIDE, 1), nn.LeakyReLU(LEAKY_SLOPE)]
            if i < spec.depth - 1:
                # the 1x1 bottleneck carries a single value per channel;
                # normalizing it is degenerate, so the innermost block skips it
                block.append(_norm(w))
            encoders.append(nn.Sequential(*block))
        self.encoders = nn.ModuleList(encoders)
        decoders = []
        for j in range(spec.depth - 1):
            in_ch = w if j == 0 else 2 * w
            decoders.append(nn.Sequential(
                nn.ReLU(), nn.ConvTranspose2d(in_ch, w, KERNEL, STRIDE, 1),
                _norm(w)))
        self.decoders = nn.ModuleList(decoders)
        self.final = nn.Sequential(nn.ReLU(),
                                   nn.ConvTranspose2d(2 * w, 1, KERNEL, STRIDE, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        feats = [nn.functional.leaky_relu(self.initial(x), LEAKY_SLOPE)]
        for enc in self.encoders:
            feats.append(enc(feats[-1]))
        out = feats[-1]
        for j, dec in enumerate(self.decoders):
            out = dec(out if j == 0 else torch.cat([out, feats[-1 - j]], dim=1))
        out = self.final(torch.cat([out, feats[1]], dim=1))
        return output_activation(out)


class Discriminator(nn.Module):
    """Scores whether a candidate manifold matches its occupancy condition."""

    def __init__(self, spec: DiscriminatorSpec):
        super().__init__()
        self.spec = spec
        w = spec.width
        self.condition = nn.Conv2d(1, w, KERNEL, STRIDE, 1)
        self.stem = nn.Conv2d(w + 1, w, KERNEL, STRIDE, 1)
        encoders = []
        for _ in range(spec.n_encoders):
            encoders.append(nn.Sequential(
                nn.Conv2d(w, w, KERNEL, STRIDE, 1), nn.LeakyReLU(LEAKY_SLOPE),
                _norm(w)))
        self.encoders = nn.ModuleList(encoders)
        self.patch = nn.Conv2d(w, 1, KERNEL, 1, 1)

    def patch_probs(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        """Per-patch probabilities that the candidate is the real manifold."""
        cond = nn.functional.leaky_relu(self.condition(condition), LEAKY_SLOPE)
        out = torch.cat([cond, candidate], dim=1)
        out = nn.functional.leaky_relu(self.stem(out), LEAKY_SLOPE)
        for enc in self.encoders:
            out = enc(out)
        return output_activation(self.patch(out))

    def forward(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        probs = self.patch_probs(condition, candidate)
        return probs.mean(dim=(1, 2, 3))


def build_generator(spec: GeneratorSpec) -> Generator:
    return Generator(spec)


def build_discriminator(spec: DiscriminatorSpec) -> Discriminator:
    return Discriminator(spec)

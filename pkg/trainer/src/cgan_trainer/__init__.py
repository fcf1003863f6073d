"""cgan_trainer: conditional GAN for BS-map to coverage-manifold translation."""

from .losses import loss
from .models import (DiscriminatorSpec, GeneratorSpec, build_discriminator,
                     build_generator)
from .train import TrainConfig, predict, train

__version__ = "0.1.0"

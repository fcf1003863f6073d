"""Training loop: one generator/discriminator pair per SINR threshold."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset

from . import tile_io
from .losses import l1_term, loss
from .models import (Discriminator, DiscriminatorSpec, Generator, GeneratorSpec,
                     build_discriminator, build_generator)


@dataclass
class TrainConfig:
    lam: float = 100.0
    lr: float = 2e-4
    betas: tuple[float, float] = (0.5, 0.999)
    batch_size: int = 8
    epochs: int = 30
    seed: int = 0
    width: int = 64
    checkpoint_path: str = "cgan.pt"
    checkpoint_every: int = 0  # additionally save every k epochs; 0 = end only
    lr_decay: bool = True  # linear decay to zero over the second half
    augment: bool = True  # random dihedral flips/rotations per sample

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


class ManifoldDataset(Dataset):
    """(occupancy, manifold) pairs for one threshold from a covmap dataset.

    With augmentation on, each draw applies a random element of the dihedral
    group to both grids; the simulated map commutes with those symmetries, so
    augmented pairs are exactly valid samples.
    """

    def __init__(self, manifest: tile_io.Manifest, gamma_db: float, split: str,
                 augment: bool = False):
        self.augment = augment
        self.items = []
        for entry in manifest.split_entries(split):
            tile_id, occ, manifolds = tile_io.read_tile(manifest.tile_path(entry))
            target = tile_io.find_gamma(manifolds, gamma_db)
            self.items.append((tile_id,
                               torch.from_numpy(occ[None].astype(np.float32)),
                               torch.from_numpy(target[None].astype(np.float32))))

    def __len__(self):
        return len(self.items)

    def __getitem__(self, idx):
        _, x, y = self.items[idx]
        if self.augment:
            k = int(torch.randint(0, 4, ()))
            x, y = torch.rot90(x, k, (1, 2)), torch.rot90(y, k, (1, 2))
            if bool(torch.randint(0, 2, ())):
                x, y = torch.flip(x, (1,)), torch.flip(y, (1,))
        return x, y


def save_checkpoint(path: str | os.PathLike, gen: Generator, disc: Discriminator,
                    gamma_db: float, config: TrainConfig) -> None:
    payload = {
        "generator": gen.state_dict(),
        "discriminator": disc.state_dict(),
        "gen_spec": {"n_cells": gen.spec.n_cells, "width": gen.spec.width},
        "disc_spec": {"n_cells": disc.spec.n_cells, "width": disc.spec.width,
                      "n_encoders": disc.spec.n_encoders},
        "gamma_db": gamma_db,
        "config": asdict(config),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_generator(path: str | os.PathLike) -> tuple[Generator, float]:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    gen = build_generator(GeneratorSpec(**payload["gen_spec"]))
    gen.load_state_dict(payload["generator"])
    gen.eval()
    return gen, float(payload["gamma_db"])


def train(manifest_path: str | os.PathLike, gamma_db: float,
          config: TrainConfig) -> tuple[Generator, dict]:
    """Alternating discriminator/generator updates over the train split.

    Returns the trained generator and the loss history (also persisted next to
    the checkpoint as JSON). Deterministic for a given seed up to framework
    nondeterminism in parallel reductions.
    """
    manifest = tile_io.read_manifest(manifest_path)
    if not any(abs(g - gamma_db) <= 1e-3 for g in manifest.gamma_db):
        raise ValueError(f"gamma {gamma_db} dB not in dataset grid {manifest.gamma_db}")
    dataset = ManifoldDataset(manifest, gamma_db, "train", augment=config.augment)
    if len(dataset) == 0:
        raise ValueError("train split is empty")

    torch.manual_seed(config.seed)
    gen = build_generator(GeneratorSpec(n_cells=manifest.n_cells, width=config.width))
    disc = build_discriminator(DiscriminatorSpec(n_cells=manifest.n_cells,
                                                 width=config.width))
    opt_g = torch.optim.Adam(gen.parameters(), lr=config.lr, betas=config.betas)
    opt_d = torch.optim.Adam(disc.parameters(), lr=config.lr, betas=config.betas)
    loader = DataLoader(dataset, batch_size=config.batch_size, shuffle=True,
                        generator=torch.Generator().manual_seed(config.seed))

    def lr_factor(epoch: int) -> float:
        if not config.lr_decay or epoch < config.epochs // 2:
            return 1.0
        remaining = config.epochs - epoch
        return remaining / (config.epochs - config.epochs // 2)

    sched_g = torch.optim.lr_scheduler.LambdaLR(opt_g, lr_factor)
    sched_d = torch.optim.lr_scheduler.LambdaLR(opt_d, lr_factor)

    history = {"gamma_db": gamma_db, "epochs": [], "disc_loss": [], "gen_loss": [],
               "l1": []}
    for epoch in range(config.epochs):
        d_sum = g_sum = l1_sum = 0.0
        batches = 0
        for x, y in loader:
            fake = gen(x)

            opt_d.zero_grad()
            d_real = disc(x, y)
            d_fake = disc(x, fake.detach())
            _, d_loss = loss(d_real, d_fake, y, fake.detach(), config.lam)
            d_loss.backward()
            opt_d.step()

            opt_g.zero_grad()
            d_fake = disc(x, fake)
            g_loss, _ = loss(d_real.detach(), d_fake, y, fake, config.lam)
            g_loss.backward()
            opt_g.step()

            d_sum += float(d_loss.detach())
            g_sum += float(g_loss.detach())
            l1_sum += float(l1_term(y, fake).detach())
            batches += 1
        sched_g.step()
        sched_d.step()
        history["epochs"].append(epoch)
        history["disc_loss"].append(d_sum / batches)
        history["gen_loss"].append(g_sum / batches)
        history["l1"].append(l1_sum / batches)
        if config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            save_checkpoint(config.checkpoint_path, gen, disc, gamma_db, config)

    save_checkpoint(config.checkpoint_path, gen, disc, gamma_db, config)
    history_path = Path(config.checkpoint_path).with_suffix(".history.json")
    history_path.write_text(json.dumps(history, indent=2))
    return gen, history


def predict(checkpoint_path: str | os.PathLike, manifest_path: str | os.PathLike,
            split: str, out_dir: str | os.PathLike) -> list[Path]:
    """Write generator outputs for a split as tile files the evaluator reads."""
    gen, gamma_db = load_generator(checkpoint_path)
    manifest = tile_io.read_manifest(manifest_path)
    if manifest.n_cells != gen.spec.n_cells:
        raise ValueError(f"checkpoint was trained at N={gen.spec.n_cells}, "
                         f"dataset has N={manifest.n_cells}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with torch.no_grad():
        for entry in manifest.split_entries(split):
            tile_id, occ, _ = tile_io.read_tile(manifest.tile_path(entry))
            x = torch.from_numpy(occ[None, None].astype(np.float32))
            values = gen(x)[0, 0].numpy()
            out = out_dir / f"tile_{tile_id:06d}.cmt"
            tile_io.write_tile(out, tile_id, occ, [(gamma_db, values)])
            written.append(out)
    return written

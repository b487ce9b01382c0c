"""Command-line interface for simulation, reconstruction, and experiments.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 numerical failure (non-finite loss, failed gradient check, broken
runtime ordering).
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np
from scipy import ndimage

from .chirp import ChirpConfig
from .errors import NonFiniteLossError
from .fields import (
    InrField,
    PointScatterers,
    QuerySet,
    VoxelField,
    extract_pointcloud,
    field_param_gradient,
    field_to_grid,
    make_query_grid,
    sample_field,
    sheet_height,
)
from .forward import (
    range_quantized_forward,
    spectral_adjoint,
    spectral_forward,
    time_domain_forward,
)
from .geometry import SceneBounds
from .io import (
    Config,
    append_metrics_csv,
    export_ply,
    load_config,
    normalize_measurements,
    read_dataset,
    read_volume,
    write_dataset,
    write_history_csv,
    write_volume,
)
from .metrics import chamfer, evaluate_fields
from .recon import (
    LossWeights,
    TrainConfig,
    backprojection,
    simulate_measurements,
    spectral_loss,
    train,
)
from .scenes import (
    BUNDLED_SCENES,
    aperture_from_config,
    bounds_from_config,
    bundled_scene,
    chirp_from_config,
    default_aperture,
    default_bounds,
    default_chirp,
    scene_from_config,
)

GRADCHECK_ADJOINT_TOL = 1e-10
GRADCHECK_FD_TOL = 1e-4
BENCH_ORDERING_FLOOR = 10_000


def _parse_bounds(values) -> SceneBounds:
    return SceneBounds(center=np.asarray(values[:3]), side=values[3])


def _load_scene(spec: str, bounds_flag):
    """Resolve --scene: a bundled name or a config-file path."""
    if spec in BUNDLED_SCENES:
        bounds = _parse_bounds(bounds_flag) if bounds_flag else default_bounds()
        return bundled_scene(spec, bounds), bounds
    if not Path(spec).exists():
        options = ", ".join(sorted(BUNDLED_SCENES))
        raise ValueError(
            f"scene {spec!r} is neither a config file nor one of the "
            f"bundled scenes: {options}"
        )
    cfg = load_config(spec)
    bounds = _parse_bounds(bounds_flag) if bounds_flag else bounds_from_config(cfg)
    return scene_from_config(cfg, bounds), bounds


def _load_chirp(path) -> ChirpConfig:
    return chirp_from_config(load_config(path)) if path else default_chirp()


def _load_aperture(path):
    return aperture_from_config(load_config(path)) if path else default_aperture()


def _parse_field_spec(spec: str):
    """Parse --field voxel[:R] | inr[:R] into (kind, resolution)."""
    kind, _, res = spec.partition(":")
    resolution = int(res) if res else 64
    if kind not in ("voxel", "inr") or resolution < 1:
        raise ValueError(f"--field expects voxel[:R] or inr[:R], got {spec!r}")
    return kind, resolution


def _weights_from_args(args) -> LossWeights:
    cfg = load_config(args.weights) if args.weights else Config()
    picked = {
        "lam": cfg.get_float("weights", "lam", default=0.5),
        "beta": cfg.get_float("weights", "beta", default=1e-2),
        "gamma": cfg.get_float("weights", "gamma", default=1e-2),
        "epsilon": cfg.get_float("weights", "epsilon", default=0.0) or None,
        "stage_fraction": cfg.get_float("weights", "stage_fraction", default=0.10),
    }
    for key in picked:
        override = getattr(args, key, None)
        if override is not None:
            picked[key] = override
    return LossWeights(**picked)


def _train_config_from_args(args) -> TrainConfig:
    cfg = load_config(args.train) if args.train else Config()
    picked = {
        "iterations": cfg.get_int("train", "iterations", default=500),
        "learning_rate": cfg.get_float("train", "learning_rate", default=1e-2),
        "poses_per_step": cfg.get_int("train", "poses_per_step", default=2),
        "reg_samples_per_step": cfg.get_int("train", "reg_samples_per_step", default=1024),
    }
    for key in picked:
        override = getattr(args, key, None)
        if override is not None:
            picked[key] = override
    return TrainConfig(seed=args.seed, reproducible=args.reproducible, **picked)


def _export_field(field, bounds, resolution, out_dir: Path, threshold: float):
    out_dir.mkdir(parents=True, exist_ok=True)
    if isinstance(field, VoxelField):
        volume = field
    else:
        volume = VoxelField(
            bounds=bounds,
            resolution=resolution,
            values=field_to_grid(field, bounds, resolution),
        )
    write_volume(volume, out_dir / "volume.raw")
    cloud = extract_pointcloud(volume, bounds, volume.resolution, threshold)
    export_ply(cloud, out_dir / "cloud.ply")
    return volume


def cmd_simulate(args) -> int:
    scene, bounds = _load_scene(args.scene, args.bounds)
    chirp = _load_chirp(args.chirp)
    aperture = _load_aperture(args.aperture)
    ms = simulate_measurements(
        scene, chirp, aperture, bounds, forward_kind=args.forward, ordered=args.reproducible
    )
    ms = normalize_measurements(ms)
    write_dataset(args.out, ms)
    print(f"wrote {args.out}: poses={len(aperture)} K={ms.k_bins}")
    return 0


def cmd_reconstruct(args) -> int:
    ms = read_dataset(args.dataset)
    bounds = _parse_bounds(args.bounds) if args.bounds else default_bounds()
    kind, resolution = _parse_field_spec(args.field)
    weights = _weights_from_args(args)
    cfg = _train_config_from_args(args)
    if kind == "voxel":
        field = VoxelField(bounds=bounds, resolution=resolution)
        queries = None
    else:
        field = InrField(bounds, seed=args.seed)
        queries = make_query_grid(bounds, resolution)
    forward_kind = args.baseline or "spectral"
    field, history = train(
        field, ms, bounds, weights, cfg, forward_kind=forward_kind, queries=queries
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_history_csv(history, out_dir / "history.csv")
    _export_field(field, bounds, resolution, out_dir, args.threshold)
    print(
        f"trained {forward_kind}/{kind}:{resolution} for {len(history)} steps, "
        f"final loss {history.total[-1]:.6g}; wrote {out_dir}"
    )
    return 0


def cmd_backproject(args) -> int:
    ms = read_dataset(args.dataset)
    bounds = _parse_bounds(args.bounds) if args.bounds else default_bounds()
    field = backprojection(ms, bounds, args.resolution, upsample=args.upsample)
    out_dir = Path(args.out)
    _export_field(field, bounds, args.resolution, out_dir, args.threshold)
    print(f"backprojected {len(ms.aperture)} poses onto {args.resolution}^3; wrote {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    predicted = read_volume(args.pred)
    bounds = predicted.bounds
    if args.gt in BUNDLED_SCENES:
        scene = bundled_scene(args.gt, bounds)
    else:
        cfg = load_config(args.gt)
        declared = bounds_from_config(cfg)
        if not (
            np.allclose(declared.center, bounds.center)
            and np.isclose(declared.side, bounds.side)
        ):
            raise ValueError(
                f"scene bounds {declared.center}/{declared.side} do not match "
                f"volume bounds {bounds.center}/{bounds.side}"
            )
        scene = scene_from_config(cfg, bounds)
    reference = scene.rasterize(bounds, predicted.resolution)
    report = evaluate_fields(predicted, reference, rel_threshold=args.threshold)
    label = args.label or Path(args.pred).stem
    append_metrics_csv(report, label, args.out)
    print(
        f"{label}: iou={report.iou:.4f} chamfer={report.chamfer:.6g} "
        f"hausdorff={report.hausdorff:.6g} psnr={report.psnr:.2f} ssim={report.ssim:.4f}"
    )
    return 0


def _bench_model(model, chirp, pose, queries, sigma, k):
    if model == "spectral":
        return lambda: spectral_forward(chirp, pose, queries, sigma, k)
    if model == "time":
        n = chirp.num_samples
        return lambda: np.fft.fft(time_domain_forward(chirp, pose, queries, sigma))[:k] / n
    if model == "rq":
        return lambda: range_quantized_forward(chirp, pose, queries, sigma, k)
    raise ValueError(f"unknown model {model!r}; expected spectral, time, or rq")


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.scene_sizes.split(",") if s]
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    if not sizes or min(sizes) < 1:
        raise ValueError("--scene-sizes expects positive integers")
    chirp = default_chirp()
    pose = default_aperture().pose(0)
    bounds = default_bounds()
    k = args.k_bins
    rng = np.random.default_rng(args.seed)
    rows = []
    medians: dict = {}
    for size in sizes:
        queries = QuerySet(
            positions=rng.uniform(bounds.lo, bounds.hi, size=(size, 3)),
            weights=np.full(size, bounds.side**3 / size),
        )
        sigma = rng.uniform(0.0, 1.0, size=size)
        for model in models:
            fn = _bench_model(model, chirp, pose, queries, sigma, k)
            fn()  # warm up caches and allocators before timing
            times = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                fn()
                times.append(time.perf_counter() - t0)
            med = float(np.median(times))
            medians[(model, size)] = med
            rows.append((model, size, k, chirp.num_samples, med))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        f.write("model,points,k,n,seconds\n")
        for model, size, kk, n, sec in rows:
            f.write(f"{model},{size},{kk},{n},{sec!r}\n")
    status = 0
    if {"spectral", "time", "rq"} <= set(models):
        for size in sizes:
            if size < BENCH_ORDERING_FLOOR:
                continue  # sub-millisecond timings are noise-dominated
            rq, sp, td = (medians[(m, size)] for m in ("rq", "spectral", "time"))
            ok = rq < sp < td
            print(f"points={size}: rq={rq:.4g}s spectral={sp:.4g}s time={td:.4g}s "
                  f"ordering {'ok' if ok else 'VIOLATED'}")
            if not ok:
                status = 3
    print(f"wrote {out}")
    return status


def _spurious_fraction(values: np.ndarray, gt_mask: np.ndarray, dilation: int = 2) -> float:
    """Energy fraction outside a Chebyshev dilation of the ground-truth voxels.

    Energy is the sum of squared reflectivities, which weights coherent
    artifacts over the diffuse optimizer noise floor.
    """
    size = 2 * dilation + 1
    keep = ndimage.binary_dilation(gt_mask, structure=np.ones((size, size, size), bool))
    energy = values.astype(np.float64) ** 2
    total = float(energy.sum())
    if total <= 0.0:
        return 0.0
    return float(energy[~keep].sum()) / total


def _train_voxel(ms, bounds, resolution, weights, cfg):
    field = VoxelField(bounds=bounds, resolution=resolution)
    return train(field, ms, bounds, weights, cfg)


def _ablate_regularization(args, out_dir: Path) -> None:
    bounds = default_bounds()
    chirp = ChirpConfig(f0=4e9, slope=70.295e12, sample_rate=5e6, num_samples=256)
    aperture = default_aperture()
    scene = bundled_scene("point", bounds)
    ms = normalize_measurements(simulate_measurements(scene, chirp, aperture, bounds))
    res = args.resolution or 32
    cfg = TrainConfig(
        iterations=args.iterations or 2000,
        learning_rate=args.learning_rate or 1e-4,
        poses_per_step=args.poses_per_step or 4,
        seed=args.seed,
        reproducible=args.reproducible,
    )
    gt_mask = scene.rasterize(bounds, res).values > 0.0
    with open(out_dir / "regularization.csv", "w") as f:
        f.write("config,beta,gamma,spurious_fraction\n")
        for label, beta, gamma in (
            ("off", 0.0, 0.0),
            ("on", args.beta or 1000.0, args.gamma or 1000.0),
        ):
            weights = LossWeights(beta=beta, gamma=gamma, stage_fraction=0.0)
            field, _ = _train_voxel(ms, bounds, res, weights, cfg)
            frac = _spurious_fraction(field.values, gt_mask)
            write_volume(field, out_dir / f"regularization_{label}.raw")
            f.write(f"{label},{beta!r},{gamma!r},{frac!r}\n")
            print(f"regularization {label}: spurious fraction {frac:.4f}")


def _ablate_bandwidth(args, out_dir: Path) -> None:
    bounds = default_bounds()
    aperture = default_aperture()
    scene = bundled_scene("two-points", bounds)
    base = default_chirp()
    res = args.resolution or 32
    cfg = TrainConfig(
        iterations=args.iterations or 400,
        learning_rate=args.learning_rate or 1e-4,
        poses_per_step=args.poses_per_step or 4,
        seed=args.seed,
        reproducible=args.reproducible,
    )
    weights = LossWeights(stage_fraction=0.0)
    with open(out_dir / "bandwidth.csv", "w") as f:
        f.write("bandwidth_hz,slope_hz_per_s,chamfer\n")
        for bandwidth in (40e6, 400e6, 800e6, 4e9):
            slope = bandwidth * base.sample_rate / base.num_samples
            chirp = ChirpConfig(
                f0=base.f0,
                slope=slope,
                sample_rate=base.sample_rate,
                num_samples=base.num_samples,
            )
            ms = normalize_measurements(
                simulate_measurements(scene, chirp, aperture, bounds)
            )
            field, _ = _train_voxel(ms, bounds, res, weights, cfg)
            cloud = extract_pointcloud(field, bounds, res, 0.5)
            dist = chamfer(cloud.positions, scene.positions)
            f.write(f"{bandwidth!r},{slope!r},{dist!r}\n")
            print(f"bandwidth {bandwidth:.3g} Hz: chamfer {dist:.6g}")


def _ablate_startfreq(args, out_dir: Path) -> None:
    bounds = default_bounds()
    aperture = default_aperture()
    scene = bundled_scene("point", bounds)
    base = default_chirp()
    res = args.resolution or 32
    cfg = TrainConfig(
        iterations=args.iterations or 400,
        learning_rate=args.learning_rate or 1e-4,
        poses_per_step=args.poses_per_step or 4,
        seed=args.seed,
        reproducible=args.reproducible,
    )
    weights = LossWeights(stage_fraction=0.0)
    gt_mask = scene.rasterize(bounds, res).values > 0.0
    with open(out_dir / "startfreq.csv", "w") as f:
        f.write("f0_hz,chamfer,spurious_fraction\n")
        for f0 in (1e9, 2e9, 3e9, 4e9, 5e9):
            chirp = ChirpConfig(
                f0=f0,
                slope=base.slope,
                sample_rate=base.sample_rate,
                num_samples=base.num_samples,
            )
            ms = normalize_measurements(
                simulate_measurements(scene, chirp, aperture, bounds)
            )
            field, _ = _train_voxel(ms, bounds, res, weights, cfg)
            cloud = extract_pointcloud(field, bounds, res, 0.5)
            dist = chamfer(cloud.positions, scene.positions)
            frac = _spurious_fraction(field.values, gt_mask)
            f.write(f"{f0!r},{dist!r},{frac!r}\n")
            print(f"f0 {f0:.3g} Hz: chamfer {dist:.6g} spurious {frac:.4f}")


def _ablate_sheet(args, out_dir: Path) -> None:
    bounds = default_bounds()
    aperture = default_aperture()
    chirp = ChirpConfig(f0=4e9, slope=70.295e12, sample_rate=5e6, num_samples=256)
    scene = bundled_scene("sheet", bounds)
    res = args.resolution or 48
    cfg = TrainConfig(
        iterations=args.iterations or 500,
        learning_rate=args.learning_rate or 1e-4,
        poses_per_step=args.poses_per_step or 4,
        seed=args.seed,
        reproducible=args.reproducible,
    )
    ms = normalize_measurements(simulate_measurements(scene, chirp, aperture, bounds))
    field, _ = _train_voxel(ms, bounds, res, LossWeights(stage_fraction=0.0), cfg)
    write_volume(field, out_dir / "sheet.raw")
    cloud = extract_pointcloud(field, bounds, res, mode="slice-argmax", slice_axis=1)
    half_extent = 0.15 * bounds.side / 0.36
    with open(out_dir / "sheet.csv", "w") as f:
        f.write("y,z_predicted,z_true,abs_error\n")
        for position in cloud.positions:
            y, z_pred = float(position[1]), float(position[2])
            if abs(y - bounds.center[1]) > half_extent:
                continue
            z_true = float(sheet_height(y - bounds.center[1], 0.02, 2.0, 10.0))
            f.write(f"{y!r},{z_pred!r},{z_true!r},{abs(z_pred - z_true)!r}\n")
    print(f"wrote {out_dir / 'sheet.csv'}")


def _ablate_loss_sensitivity(args, out_dir: Path) -> None:
    """Forward-only probe: loss components vs scene-position noise scale."""
    bounds = default_bounds()
    aperture = default_aperture()
    chirp = ChirpConfig(f0=77e9, slope=70.295e12, sample_rate=5e6, num_samples=256)
    scene = bundled_scene("two-points", bounds)
    clean = normalize_measurements(simulate_measurements(scene, chirp, aperture, bounds))
    mag_ref = float(np.mean(np.abs(clean.spectra) ** 2))
    re_ref = float(np.mean(clean.spectra.real**2))
    im_ref = float(np.mean(clean.spectra.imag**2))
    with open(out_dir / "loss_sensitivity.csv", "w") as f:
        f.write("noise_m,mag_mse,real_mse,imag_mse\n")
        for i, noise in enumerate(float(v) for v in np.logspace(-4, -1, 4)):
            rng = np.random.default_rng(args.seed + i)
            step = rng.normal(size=scene.positions.shape)
            step /= np.linalg.norm(step, axis=1, keepdims=True)
            moved = PointScatterers(
                positions=scene.positions + noise * step,
                intensities=scene.intensities,
            )
            noisy = simulate_measurements(moved, chirp, aperture, bounds)
            spectra = noisy.spectra / clean.scale
            mag = float(np.mean((np.abs(clean.spectra) - np.abs(spectra)) ** 2)) / mag_ref
            re = float(np.mean((clean.spectra.real - spectra.real) ** 2)) / re_ref
            im = float(np.mean((clean.spectra.imag - spectra.imag) ** 2)) / im_ref
            f.write(f"{noise!r},{mag!r},{re!r},{im!r}\n")
            print(f"noise {noise:.1e} m: mag {mag:.3e} real {re:.3e} imag {im:.3e}")


ABLATIONS = {
    "regularization": _ablate_regularization,
    "bandwidth": _ablate_bandwidth,
    "startfreq": _ablate_startfreq,
    "sheet": _ablate_sheet,
    "loss-sensitivity": _ablate_loss_sensitivity,
}


def cmd_ablate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ABLATIONS[args.what](args, out_dir)
    return 0


def _gradcheck_voxel(seed: int):
    bounds = default_bounds()
    chirp = default_chirp()
    aperture = default_aperture()
    rng = np.random.default_rng(seed)
    queries = make_query_grid(bounds, 6)
    sigma = rng.uniform(0.0, 1.0, size=len(queries))
    pose = aperture.pose(int(rng.integers(len(aperture))))
    k = 16
    z = spectral_forward(chirp, pose, queries, sigma, k)
    residual = rng.normal(size=k) + 1j * rng.normal(size=k)
    lhs = float(np.sum(z.real * residual.real + z.imag * residual.imag))
    rhs = float(np.dot(sigma, spectral_adjoint(chirp, pose, queries, residual, k)))
    adjoint_err = abs(lhs - rhs) / max(abs(lhs), 1e-300)

    scene = PointScatterers(
        positions=np.array([[0.04, -0.02, 0.01]]), intensities=np.array([1.0])
    )
    ms = normalize_measurements(simulate_measurements(scene, chirp, aperture, bounds))
    res = 5
    base = rng.uniform(0.05, 1.0, size=(res, res, res))
    pose_ids = list(range(0, len(aperture), 60))
    grid = make_query_grid(bounds, res)

    def loss_of(values):
        f = VoxelField(bounds=bounds, resolution=res, values=values, output_scale=100.0)
        s = f.sample(grid.positions)
        return sum(
            spectral_loss(
                spectral_forward(chirp, aperture.pose(i), grid, s, ms.k_bins),
                ms.spectra[i],
            )[0]
            for i in pose_ids
        )

    field = VoxelField(bounds=bounds, resolution=res, values=base, output_scale=100.0)
    s = field.sample(grid.positions)
    dsigma = np.zeros(len(grid))
    for i in pose_ids:
        zz = spectral_forward(chirp, aperture.pose(i), grid, s, ms.k_bins)
        _, g = spectral_loss(zz, ms.spectra[i])
        dsigma += spectral_adjoint(chirp, aperture.pose(i), grid, g, ms.k_bins)
    grad = field.param_gradient(grid.positions, dsigma)[0]
    h = 1e-4 * base.max()
    fd_err = 0.0
    for _ in range(10):
        idx = tuple(rng.integers(0, res, size=3))
        plus, minus = base.copy(), base.copy()
        plus[idx] += h
        minus[idx] -= h
        fd = (loss_of(plus) - loss_of(minus)) / (2 * h)
        denom = max(abs(fd), abs(grad[idx]), 1e-12)
        fd_err = max(fd_err, abs(fd - grad[idx]) / denom)
    return adjoint_err, fd_err


def _gradcheck_inr(seed: int):
    bounds = default_bounds()
    rng = np.random.default_rng(seed)
    field = InrField(bounds, n_frequencies=4, hidden=(32, 32), seed=seed)
    positions = rng.uniform(bounds.lo, bounds.hi, size=(64, 3))
    upstream = rng.normal(size=64)
    grads = field_param_gradient(field, positions, upstream)
    params = field.params()

    def loss_of() -> float:
        return float(np.dot(sample_field(field, positions), upstream))

    h = 1e-5
    fd_err = 0.0
    for _ in range(50):
        layer = int(rng.integers(len(params)))
        flat = params[layer].ravel()
        j = int(rng.integers(flat.size))
        original = flat[j]
        flat[j] = original + h
        up = loss_of()
        flat[j] = original - h
        down = loss_of()
        flat[j] = original
        fd = (up - down) / (2 * h)
        got = grads[layer].ravel()[j]
        denom = max(abs(fd), abs(got), 1e-12)
        fd_err = max(fd_err, abs(fd - got) / denom)
    return None, fd_err


def cmd_gradcheck(args) -> int:
    if args.field == "voxel":
        adjoint_err, fd_err = _gradcheck_voxel(args.seed)
    else:
        adjoint_err, fd_err = _gradcheck_inr(args.seed)
    ok = fd_err < GRADCHECK_FD_TOL
    if adjoint_err is not None:
        ok = ok and adjoint_err < GRADCHECK_ADJOINT_TOL
        print(f"adjoint identity max rel err: {adjoint_err:.3e} "
              f"({'pass' if adjoint_err < GRADCHECK_ADJOINT_TOL else 'FAIL'})")
    print(f"finite-difference max rel err: {fd_err:.3e} "
          f"({'pass' if fd_err < GRADCHECK_FD_TOL else 'FAIL'})")
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarfield",
        description="FMCW radar simulation and volumetric reconstruction",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--reproducible", action="store_true",
                       help="deterministic reductions; bitwise-identical reruns")

    def add_bounds(p):
        p.add_argument("--bounds", type=float, nargs=4, metavar=("CX", "CY", "CZ", "SIDE"),
                       help="scene cube center and side (default: 0.36 m cube at origin)")

    p = sub.add_parser("simulate", help="synthesize a measurement dataset")
    p.add_argument("--scene", required=True,
                   help="bundled scene name (%s) or config path" % ", ".join(sorted(BUNDLED_SCENES)))
    p.add_argument("--chirp", help="config path with a [chirp] section")
    p.add_argument("--aperture", help="config path with an [aperture] section")
    p.add_argument("--forward", choices=("spectral", "time"), default="spectral")
    p.add_argument("--out", required=True)
    add_bounds(p)
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="fit a field to a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--field", default="voxel:64", help="voxel[:R] or inr[:R]")
    p.add_argument("--baseline", choices=("tfts", "tfss", "rq"))
    p.add_argument("--train", help="config path with a [train] section")
    p.add_argument("--weights", help="config path with a [weights] section")
    p.add_argument("--iterations", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--poses-per-step", dest="poses_per_step", type=int)
    p.add_argument("--reg-samples-per-step", dest="reg_samples_per_step", type=int)
    p.add_argument("--lam", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--stage-fraction", dest="stage_fraction", type=float)
    p.add_argument("--threshold", type=float, default=0.5,
                   help="relative threshold for point-cloud extraction")
    p.add_argument("--out", required=True)
    add_bounds(p)
    add_common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("backproject", help="classical coherent backprojection")
    p.add_argument("--dataset", required=True)
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--upsample", type=int, default=8)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    add_bounds(p)
    add_common(p)
    p.set_defaults(func=cmd_backproject)

    p = sub.add_parser("evaluate", help="score a volume against ground truth")
    p.add_argument("--pred", required=True, help="volume .raw path (with .meta sidecar)")
    p.add_argument("--gt", required=True, help="bundled scene name or config path")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--label")
    p.add_argument("--out", required=True, help="metrics CSV to append to")
    add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time the forward models")
    p.add_argument("--scene-sizes", dest="scene_sizes", default="100000",
                   help="comma-separated query counts")
    p.add_argument("--models", default="spectral,time,rq")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--k-bins", dest="k_bins", type=int, default=16)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ablate", help="run a packaged ablation sweep")
    p.add_argument("--what", choices=sorted(ABLATIONS), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--resolution", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--poses-per-step", dest="poses_per_step", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    add_common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("gradcheck", help="verify adjoint and gradients")
    p.add_argument("--field", choices=("voxel", "inr"), default="voxel")
    add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except NonFiniteLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

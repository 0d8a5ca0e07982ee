import math
import warnings

import pytest

from conftest import natural_images
from unfoldsr.bench import (FIELDS, BenchConfig, BenchFailure, baseline_methods, cell_seed,
                            load_config, load_dataset, read_csv, rows_to_csv, run_benchmark)
from unfoldsr.degradation import BENCHMARK_KERNELS, delta_kernel
from unfoldsr.imaging import write_png


@pytest.fixture(scope="module")
def small_set():
    return natural_images(96, ("astronaut", "coffee", "rocket"))


def test_nearest_on_identity_degradation_is_exact(rng):
    images = [("a", rng.random((24, 24, 3))), ("b", rng.random((36, 36, 3)))]
    cfg = BenchConfig(kernels=("delta",), scales=(1,), noises=(0.0,), methods=("nearest-upsample",))
    rows = run_benchmark(images, cfg, kernels={"delta": delta_kernel(1)})
    assert len(rows) == 1
    assert rows[0].psnr_db == math.inf and rows[0].n_images == 2
    assert "inf" in rows_to_csv(rows)


def test_default_grid_has_108_cells(rng):
    images = [("tiny", rng.random((36, 36, 3)))]
    rows = run_benchmark(images, BenchConfig(methods=("nearest-upsample",)))
    assert len(rows) == 12 * 3 * 3
    assert {r.kernel_id for r in rows} == set(BENCHMARK_KERNELS)
    assert all(math.isfinite(r.psnr_db) for r in rows)


def test_csv_byte_identical_and_round_trip(small_set):
    cfg = BenchConfig(kernels=("iso_1.2", "motion_2"), scales=(2, 3), noises=(2.55,),
                      methods=("nearest-upsample", "usr-tv"), iters=3, tv_iters=10)
    a = rows_to_csv(run_benchmark(small_set, cfg))
    b = rows_to_csv(run_benchmark(small_set, cfg))
    assert a == b
    assert a.splitlines()[0] == ",".join(FIELDS)
    back = read_csv(a)
    assert len(back) == 8
    assert all(math.isnan(r.runtime_ms) for r in back)
    assert rows_to_csv(back) == a


def test_timing_column(rng):
    images = [("a", rng.random((36, 36)))]
    cfg = BenchConfig(kernels=("iso_0.7",), scales=(2,), noises=(0.0,), methods=("nearest-upsample",))
    rows = run_benchmark(images, cfg)
    line = rows_to_csv(rows, timing=True).splitlines()[1]
    assert line.split(",")[5] != ""
    assert rows[0].runtime_ms >= 0


def test_parallel_matches_serial(small_set):
    cfg = BenchConfig(kernels=("iso_1.6",), scales=(2, 4), noises=(0.0, 7.65),
                      methods=("bicubic-upsample", "data-only"), iters=2)
    serial = rows_to_csv(run_benchmark(small_set[:2], cfg))
    assert rows_to_csv(run_benchmark(small_set[:2], cfg, jobs=2)) == serial


def test_method_ordering_on_gaussian_kernels(small_set):
    cfg = BenchConfig(kernels=("iso_1.6", "aniso_2"), scales=(2,), noises=(0.0,),
                      methods=("nearest-upsample", "data-only", "usr-tv"))
    by = {(r.method, r.kernel_id): r.psnr_db for r in run_benchmark(small_set, cfg)}
    for kid in ("iso_1.6", "aniso_2"):
        assert by["usr-tv", kid] >= by["nearest-upsample", kid] + 1.0
        assert by["data-only", kid] > by["nearest-upsample", kid]


def test_stronger_tv_helps_noisy_inputs(small_set):
    # the default TV strength is tuned for clean inputs; noisy ones want more
    cfg = BenchConfig(kernels=("iso_1.6",), scales=(2,), noises=(2.55,),
                      methods=("nearest-upsample", "usr-tv"))
    weak = {r.method: r.psnr_db for r in run_benchmark(small_set, cfg)}
    strong = {r.method: r.psnr_db for r in run_benchmark(small_set, cfg.with_overrides(tv_scale=10.0))}
    assert strong["usr-tv"] > weak["usr-tv"] + 2.0
    assert strong["usr-tv"] > strong["nearest-upsample"] + 2.0


def test_failures_are_recorded_not_fatal(rng):
    images = [("a", rng.random((36, 36)))]
    cfg = BenchConfig(kernels=("iso_0.7",), scales=(2,), noises=(0.0,),
                      methods=("nearest-upsample", "usr-cnn"))
    failures = []
    with pytest.warns(BenchFailure, match="usr-cnn"):
        rows = run_benchmark(images, cfg, failures=failures)
    assert [r.method for r in rows] == ["nearest-upsample"]
    assert len(failures) == 1 and "weights" in failures[0][2]


def test_too_small_images_fail_per_image(rng):
    images = [("small", rng.random((12, 12))), ("ok", rng.random((36, 36)))]
    cfg = BenchConfig(kernels=("iso_1.2",), scales=(2,), noises=(0.0,),
                      methods=("nearest-upsample", "bicubic-upsample"))
    failures = []
    with pytest.warns(BenchFailure, match="image=small"):
        rows = run_benchmark(images, cfg, failures=failures)
    assert [r.n_images for r in rows] == [1, 1]
    assert len(failures) == 2 and all("larger" in f[2] for f in failures)


def test_unknown_method_rejected(rng):
    with pytest.raises(ValueError, match="unknown method"):
        run_benchmark([("a", rng.random((12, 12)))], BenchConfig(methods=("magic",)))


def test_cell_seed_is_stable():
    assert cell_seed(0, "a.png", "iso_1.6", 2, 2.55) == cell_seed(0, "a.png", "iso_1.6", 2, 2.55)
    assert cell_seed(0, "a.png", "iso_1.6", 2, 2.55) != cell_seed(1, "a.png", "iso_1.6", 2, 2.55)
    assert cell_seed(0, "a.png", "iso_1.6", 2, 2.55) != cell_seed(0, "b.png", "iso_1.6", 2, 2.55)


def test_config_file_and_overrides(tmp_path):
    (tmp_path / "b.toml").write_text(
        'kernels = ["iso_0.7"]\nscales = [2]\nnoises = [0, 2.55]\nseed = 5\n'
    )
    cfg = load_config(tmp_path / "b.toml")
    assert cfg.kernels == ("iso_0.7",) and cfg.noises == (0.0, 2.55) and cfg.seed == 5
    cfg = cfg.with_overrides(seed=7, crop=None)
    assert cfg.seed == 7 and cfg.crop is None
    (tmp_path / "bad.toml").write_text("kernel = ['x']\n")
    with pytest.raises(ValueError, match="kernel"):
        load_config(tmp_path / "bad.toml")


def test_load_dataset(tmp_path, rng):
    with pytest.raises(ValueError):
        load_dataset(tmp_path)
    write_png(tmp_path / "b.png", rng.random((12, 12, 3)))
    write_png(tmp_path / "a.png", rng.random((12, 12, 3)))
    names = [n for n, _ in load_dataset(tmp_path)]
    assert names == ["a.png", "b.png"]


def test_baseline_methods():
    assert baseline_methods() == ["nearest-upsample", "bicubic-upsample", "data-only", "usr-tv"]
    assert baseline_methods(True)[-1] == "usr-cnn"


def test_crop_option(rng):
    images = [("a", rng.random((50, 40)))]
    cfg = BenchConfig(kernels=("iso_0.7",), scales=(2,), noises=(0.0,),
                      methods=("nearest-upsample",), crop=40)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rows = run_benchmark(images, cfg)
    assert rows[0].n_images == 1

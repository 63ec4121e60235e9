#!/usr/bin/env python3
"""
Tests for the relmor command line
"""

import argparse

import numpy as np
import pandas as pd
import pytest
from scipy import io as spio

from relmor.harness.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, build_parser, main, parse_int_list, parse_orders
from relmor.harness.model_package import load_model, save_model_package


@pytest.fixture
def square_package(minimum_phase_model, tmp_path):
    path = tmp_path / "square"
    save_model_package(minimum_phase_model(900, 6), path, "square")
    return path


@pytest.fixture
def tall_package(stable_model, tmp_path):
    path = tmp_path / "tall"
    save_model_package(stable_model(901, 5, 1, 2), path, "tall")
    return path


@pytest.mark.unit
class TestArgumentParsing:
    def test_order_range_is_inclusive(self):
        assert parse_orders("5:8") == [5, 6, 7, 8]

    def test_order_list(self):
        assert parse_orders("2,4, 6") == [2, 4, 6]

    @pytest.mark.parametrize("text", ["a:b", "1:2:3", "x"])
    def test_bad_orders(self, text):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_orders(text)

    def test_int_list(self):
        assert parse_int_list("0,1,2") == [0, 1, 2]
        with pytest.raises(argparse.ArgumentTypeError):
            parse_int_list("0,one")

    def test_reduce_defaults(self):
        args = build_parser().parse_args(["reduce", "--model", "m", "--interval", "0,1", "--orders", "2"])
        assert args.methods == ["tlbt", "tlbst", "tlirka", "tlrhmora"]
        assert args.seeds == [0]
        assert args.orientation == "right"

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


@pytest.mark.integration
class TestReduceCommand:
    def test_successful_grid(self, square_package, tmp_path, capsys):
        out = tmp_path / "report.csv"
        code = main(["reduce", "--model", str(square_package), "--interval", "0,1", "--orders", "1:2",
                     "--methods", "tlbt", "--out", str(out)])
        assert code == EXIT_OK
        assert "Grid completed" in capsys.readouterr().out
        frame = pd.read_csv(out)
        assert list(frame["order"]) == [1, 2]
        assert (tmp_path / "report.txt").exists()

    def test_partial_failure(self, tall_package):
        code = main(["reduce", "--model", str(tall_package), "--interval", "0,1", "--orders", "2",
                     "--methods", "tlbt,tlbst"])
        assert code == EXIT_PARTIAL

    def test_invalid_interval(self, square_package, capsys):
        code = main(["reduce", "--model", str(square_package), "--interval", "1,0", "--orders", "2",
                     "--methods", "tlbt"])
        assert code == EXIT_CONFIG
        assert "Invalid configuration" in capsys.readouterr().out

    def test_unknown_method(self, square_package):
        code = main(["reduce", "--model", str(square_package), "--interval", "0,1", "--orders", "2",
                     "--methods", "tlbt,bogus"])
        assert code == EXIT_CONFIG

    def test_order_above_model_order(self, square_package):
        code = main(["reduce", "--model", str(square_package), "--interval", "0,1", "--orders", "7",
                     "--methods", "tlbt"])
        assert code == EXIT_CONFIG

    def test_missing_model(self, tmp_path):
        code = main(["reduce", "--model", str(tmp_path / "nowhere"), "--interval", "0,1", "--orders", "2",
                     "--methods", "tlbt"])
        assert code == EXIT_CONFIG

    def test_impulse_files(self, square_package, tmp_path):
        code = main(["reduce", "--model", str(square_package), "--interval", "0,0.5", "--orders", "2",
                     "--methods", "tlbt", "--impulse-out", str(tmp_path / "impulse"), "--impulse-samples", "21"])
        assert code == EXIT_OK
        frame = pd.read_csv(tmp_path / "impulse" / "tlbt_r2.csv")
        assert len(frame) == 21
        assert frame["t"].iloc[-1] == 0.5


@pytest.mark.integration
class TestConvertCommand:
    def test_mat_conversion(self, stable_model, tmp_path, capsys):
        H = stable_model(910, 4, 1, 1)
        spio.savemat(str(tmp_path / "bench.mat"), {"A": H.A, "B": H.B, "C": H.C})
        code = main(["convert", "--mat", str(tmp_path / "bench.mat"), "--out", str(tmp_path / "pkg"),
                     "--name", "bench"])
        assert code == EXIT_OK
        assert "n=4" in capsys.readouterr().out
        assert np.array_equal(load_model(tmp_path / "pkg").model.A, H.A)

    def test_matrix_market_conversion(self, stable_model, tmp_path):
        H = stable_model(911, 3, 1, 1)
        args = ["convert", "--out", str(tmp_path / "pkg"), "--name", "mm"]
        for name in "ABC":
            path = tmp_path / f"{name}.mtx"
            spio.mmwrite(str(path), getattr(H, name))
            args += [f"--{name}", str(path)]
        assert main(args) == EXIT_OK
        assert load_model(tmp_path / "pkg").model.n == 3

    def test_missing_sources(self, tmp_path):
        code = main(["convert", "--A", str(tmp_path / "A.mtx"), "--out", str(tmp_path / "pkg"), "--name", "x"])
        assert code == EXIT_CONFIG

    def test_unreadable_source(self, tmp_path):
        (tmp_path / "broken.mat").write_bytes(b"not a mat file")
        code = main(["convert", "--mat", str(tmp_path / "broken.mat"), "--out", str(tmp_path / "pkg"),
                     "--name", "x"])
        assert code == EXIT_CONFIG

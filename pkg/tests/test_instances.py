import numpy as np
import pytest

from blotto2.instances import (
    SplitMix64,
    gen_log_security,
    gen_random_parametric,
    gen_soft_blotto_double,
    read_instance,
    write_instance,
)
from blotto2.model import SchemaError, validate_instance


def test_splitmix64_reference_sequence():
    # published test vectors for the splitmix64 mixer, seed 0
    r = SplitMix64(0)
    assert r.next_u64() == 0xE220A8397B1DCDAF
    assert r.next_u64() == 0x6E789E6AA1B965F4
    assert r.next_u64() == 0x06C45D188009454F


def test_splitmix64_uniform_range_and_determinism():
    a = SplitMix64(99)
    b = SplitMix64(99)
    xs = [a.uniform(-2.0, 5.0) for _ in range(500)]
    ys = [b.uniform(-2.0, 5.0) for _ in range(500)]
    assert xs == ys
    assert min(xs) >= -2.0 and max(xs) < 5.0
    assert np.mean(xs) == pytest.approx(1.5, abs=0.35)


def test_soft_blotto_double_tensor_entries():
    inst = gen_soft_blotto_double(2, 2, 3, seed=123)
    assert validate_instance(inst) == []
    assert (inst.n, inst.m1, inst.m2) == (2, 2, 3)
    v = [1 / 3, 2 / 3]
    for i, bf in enumerate(inst.battlefields):
        u = bf.payoff.u
        assert u.shape == (2, 2, 3, 4)
        for k1 in range(3):
            for k2 in range(4):
                p = 0.5 if k1 + k2 == 0 else k1 / (k1 + k2)
                base = v[i] * (1.0 - 2.0 * p)
                assert u[0, 0, k1, k2] == pytest.approx(base)
                assert u[1, 0, k1, k2] == pytest.approx(2 * base)
                assert u[0, 1, k1, k2] == pytest.approx(2 * base)
                assert u[1, 1, k1, k2] == pytest.approx(4 * base)


def test_soft_blotto_double_balanced_and_forced_cases():
    inst = gen_soft_blotto_double(3, 2, 2, seed=0)
    for bf in inst.battlefields:
        u = bf.payoff.u
        for k in range(3):
            np.testing.assert_allclose(u[:, :, k, k], 0.0, atol=1e-15)
    solo = gen_soft_blotto_double(1, 1, 1, seed=0)
    # one soldier against none takes the whole battlefield for player 1
    assert solo.battlefields[0].payoff.u[0, 0, 1, 0] == pytest.approx(-1.0)


def test_soft_blotto_double_ignores_seed():
    a = gen_soft_blotto_double(2, 1, 1, seed=0)
    b = gen_soft_blotto_double(2, 1, 1, seed=777)
    for x, y in zip(a.battlefields, b.battlefields):
        np.testing.assert_array_equal(x.payoff.u, y.payoff.u)


def test_gen_random_parametric_layout():
    inst = gen_random_parametric(3, 10.0, "quadratic", 2, 4, seed=5)
    assert validate_instance(inst) == []
    assert inst.aggregator == "min" and inst.one_sided and not inst.discrete
    for bf in inst.battlefields:
        assert bf.payoff.kind == "quadratic"
        for coef in (bf.payoff.b, bf.payoff.c, bf.payoff.d):
            assert coef.shape == (2, 4)
            assert coef.min() >= 0.0 and coef.max() <= 100.0

    aff = gen_random_parametric(2, 4.0, "affine", 3, 3, seed=5)
    assert aff.battlefields[0].payoff.kind == "affine"
    with pytest.raises(ValueError):
        gen_random_parametric(2, 4.0, "cubic", 2, 2, seed=1)
    with pytest.raises(ValueError):
        gen_random_parametric(0, 4.0, "affine", 2, 2, seed=1)


def test_gen_random_parametric_seeding():
    a = gen_random_parametric(2, 5.0, "affine", 2, 2, seed=42)
    b = gen_random_parametric(2, 5.0, "affine", 2, 2, seed=42)
    c = gen_random_parametric(2, 5.0, "affine", 2, 2, seed=43)
    np.testing.assert_array_equal(a.battlefields[0].payoff.c,
                                  b.battlefields[0].payoff.c)
    assert not np.array_equal(a.battlefields[0].payoff.c,
                              c.battlefields[0].payoff.c)


def test_gen_log_security_ranges():
    inst = gen_log_security(2, 6.0, 2, 3, seed=11)
    assert validate_instance(inst) == []
    for bf in inst.battlefields:
        assert bf.payoff.kind == "log_matrix"
        assert bf.payoff.A.min() >= -1.0 and bf.payoff.A.max() <= 1.0
        assert bf.payoff.C.min() >= 0.0 and bf.payoff.C.max() <= 1.0


@pytest.mark.parametrize("make", [
    lambda: gen_soft_blotto_double(2, 2, 2, seed=0),
    lambda: gen_random_parametric(2, 3.0, "affine", 2, 2, seed=3),
    lambda: gen_random_parametric(2, 3.0, "quadratic", 2, 2, seed=3),
    lambda: gen_log_security(2, 3.0, 2, 2, seed=3),
])
def test_file_round_trip(tmp_path, make):
    inst = make()
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    back = read_instance(path)
    assert back.n == inst.n
    assert back.aggregator == inst.aggregator
    assert back.mode == inst.mode
    for x, y in zip(inst.battlefields, back.battlefields):
        if hasattr(x.payoff, "u"):
            np.testing.assert_array_equal(x.payoff.u, y.payoff.u)
        else:
            assert x.payoff.kind == y.payoff.kind


def test_write_is_canonical(tmp_path):
    inst = gen_soft_blotto_double(2, 1, 1, seed=0)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_instance(inst, p1)
    write_instance(inst, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_bytes().endswith(b"\n")


def test_read_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemaError):
        read_instance(bad)
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"n": 1}')
    with pytest.raises(SchemaError):
        read_instance(wrong)

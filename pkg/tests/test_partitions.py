import math

import pytest

from lacunary import (
    IntegerSet,
    Partition,
    decompose,
    dyadic_partition,
    generate_integers,
    generate_polynomial,
    generate_primes,
    gross_partition,
    verify_block_growth,
)


def test_dyadic_cut_points():
    P = dyadic_partition(3)
    assert P.cut_points == (1, 2, 4, 8)
    assert P.block_interval(2) == (2, 4)  # positive side of [-4,-2) u (2,4]
    assert P.block_size(2) == 4


def test_dyadic_k1_blocks():
    P = dyadic_partition(1)
    assert P.cut_points == (1, 2)
    assert P.block_of(1) == 0 and P.block_of(-1) == 0
    assert P.block_of(2) == 1 and P.block_of(-2) == 1
    assert P.block_of(3) is None


def test_dyadic_annulus_sizes():
    P = dyadic_partition(10)
    for k in range(1, 11):
        # count integers in the annulus directly
        hi, lo = 2**k, 2 ** (k - 1)
        direct = 2 * (hi - lo)
        assert P.block_size(k) == direct == 2**k


def test_gross_factorial_cut_points():
    P = gross_partition(4)
    assert P.cut_points == (2**1, 2**2, 2**6, 2**24)
    assert P.kind == "gross"
    P5 = gross_partition(5)
    assert P5.cut_points[-1] == 2**120  # exact bignum


def test_gross_single_cut():
    P = gross_partition(1)
    assert P.cut_points == (2,)
    assert P.block_of(2) == 0
    assert P.block_of(3) is None  # everything beyond [-2,2] is remainder


def test_gross_custom_exponents_validated():
    gross_partition(3, exponents=[2, 4, 9, 21])
    with pytest.raises(ValueError, match="ratio"):
        gross_partition(3, exponents=[2, 3, 4])  # ratios 1.5, 1.33 too slow
    with pytest.raises(ValueError):
        gross_partition(3, exponents=[4, 4, 9])


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition((4, 2), "custom")
    with pytest.raises(ValueError):
        Partition((), "custom")
    with pytest.raises(ValueError):
        Partition((1, 2), "nonsense")


@pytest.mark.parametrize("cuts", [(1, 2, 4, 8), (2, 4, 64), (3, 10, 100)])
def test_blocks_disjoint_and_cover(cuts):
    P = Partition(cuts, "custom")
    top = cuts[-1]
    for n in range(-top, top + 1):
        k = P.block_of(n)
        assert k is not None
        lo, hi = P.block_interval(k)
        if k == 0:
            assert abs(n) <= hi
        else:
            assert lo < abs(n) <= hi
    # each integer lands in exactly one block by construction of block_of;
    # cross-check totals
    assert sum(P.block_size(k) for k in range(P.block_count)) == 2 * top + 1


def test_decompose_example():
    E = IntegerSet.from_iterable([1, 3, 5, 9])
    D = decompose(E, dyadic_partition(4))
    assert [b.elements for b in D.blocks] == [(1,), (), (3,), (5,), (9,)]
    assert len(D.remainder) == 0


def test_decompose_empty_set():
    D = decompose(IntegerSet(()), dyadic_partition(3))
    assert all(len(b) == 0 for b in D.blocks)


def test_decompose_primes_total():
    E = generate_primes(2**10)
    D = decompose(E, dyadic_partition(10))
    assert sum(len(b) for b in D.blocks) == 172
    assert len(D.remainder) == 0


def test_decompose_cardinality_with_remainder():
    E = IntegerSet.from_iterable(range(-20, 21))
    D = decompose(E, dyadic_partition(3))
    assert sum(len(b) for b in D.blocks) + len(D.remainder) == len(E)
    assert D.remainder.elements == tuple(
        sorted((n for n in range(-20, 21) if abs(n) > 8), key=lambda n: (abs(n), n))
    )


def test_decompose_negative_elements_split_by_magnitude():
    E = IntegerSet.from_iterable([-3, 3, -5, 7])
    D = decompose(E, dyadic_partition(3))
    assert D.blocks[2].elements == (-3, 3)
    assert D.blocks[3].elements == (-5, 7)


def test_verify_block_growth_full_integers():
    E = generate_integers(2**10)
    D = decompose(E, dyadic_partition(10))
    report = verify_block_growth(D)
    # positive half of every annulus is full: |E_k| = |I_k| / 2
    for k, ratio in enumerate(report.ratios):
        if k >= 1:
            assert ratio == pytest.approx(
                math.log(2 ** (k - 1)) / math.log(2**k) if k > 1 else 0.0, abs=1e-12
            )


def test_verify_block_growth_signed_integers_ratio_one():
    E = IntegerSet.from_iterable(range(-(2**8), 2**8 + 1))
    D = decompose(E, dyadic_partition(8))
    report = verify_block_growth(D)
    assert all(r == pytest.approx(1.0) for r in report.ratios[1:])


def test_verify_block_growth_squares_tail():
    E = generate_polynomial([0, 0, 1], 10**4)
    D = decompose(E, dyadic_partition(27))
    report = verify_block_growth(D, tail_start=18)
    # analytic oracle: |E_k| = isqrt(2^k) - isqrt(2^(k-1)), capped at the
    # truncation k <= 10^4
    for k in range(1, 28):
        expected = min(math.isqrt(2**k), 10**4) - min(math.isqrt(2 ** (k - 1)), 10**4)
        got = len(D.blocks[k])
        assert got == expected
    assert report.min_tail_ratio is not None
    assert report.min_tail_ratio >= 0.4
    assert report.empty_tail_blocks == ()


def test_verify_block_growth_flags_empty_blocks():
    # gap set: nothing between 2^5 and 2^16
    vals = list(range(2, 33)) + list(range(2**16, 2**16 + 100))
    E = IntegerSet.from_iterable(vals)
    D = decompose(E, dyadic_partition(17))
    report = verify_block_growth(D)
    assert len(report.empty_tail_blocks) >= 5
    assert all(report.ratios[k] is None for k in report.empty_tail_blocks)


def test_partition_json_round_trip():
    P = gross_partition(5)
    back = Partition.from_json(P.to_json())
    assert back == P
    doc = P.to_json_dict()
    assert doc["cut_points"][-1] == str(2**120)


def test_decomposition_json_counts():
    E = generate_primes(100)
    D = decompose(E, dyadic_partition(7))
    doc = D.to_json_dict(include_elements=True)
    assert doc["blocks"][3]["set_size"] == len(D.blocks[3])
    assert doc["blocks"][3]["elements"] == [str(n) for n in D.blocks[3].elements]

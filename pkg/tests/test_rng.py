"""The PRNG must be deterministic and unbiased enough to trust."""

from repairshop.rng import Xoshiro256, derive_seed


def test_same_seed_same_stream():
    a = Xoshiro256(12345)
    b = Xoshiro256(12345)
    assert [a.next_u64() for _ in range(50)] == [b.next_u64() for _ in range(50)]


def test_frozen_reference_values():
    # frozen outputs pin the algorithm across platforms and refactors
    rng = Xoshiro256(0)
    first = [rng.next_u64() for _ in range(3)]
    assert first == [11091344671253066420, 13793997310169335082, 1900383378846508768]


def test_randint_bounds_and_coverage():
    rng = Xoshiro256(7)
    seen = set()
    for _ in range(2000):
        v = rng.randint(3, 9)
        assert 3 <= v <= 9
        seen.add(v)
    assert seen == set(range(3, 10))


def test_random_unit_interval_mean():
    rng = Xoshiro256(11)
    n = 20000
    mean = sum(rng.random() for _ in range(n)) / n
    assert abs(mean - 0.5) < 0.01


def test_shuffle_and_sample_are_permutations():
    rng = Xoshiro256(3)
    items = list(range(20))
    rng.shuffle(items)
    assert sorted(items) == list(range(20))
    picked = rng.sample(range(20), 8)
    assert len(set(picked)) == 8 and all(0 <= p < 20 for p in picked)


def test_derive_seed_separates_streams():
    base = 99
    labels = ["failures", "selection", "jobgen", 0, 1]
    seeds = [derive_seed(base, label) for label in labels]
    assert len(set(seeds)) == len(seeds)
    assert derive_seed(base, "failures") == seeds[0]  # stable
    assert derive_seed(base + 1, "failures") != seeds[0]


def test_spawn_matches_derive():
    rng = Xoshiro256(42)
    child = rng.spawn("worker", 3)
    assert child.seed == derive_seed(42, "worker", 3)

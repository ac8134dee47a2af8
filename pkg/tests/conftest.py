import numpy as np
import pytest

from resalloc.game import Resource, ResourceGame, UtilityRule, WelfareRule


def random_game(rng, n_max=4, r_max=6, act_max=3):
    """Small game with random submodular welfare and random nonnegative utilities."""
    n = int(rng.integers(1, n_max + 1))
    R = int(rng.integers(1, r_max + 1))
    welfare, utility, res = {}, {}, []
    for r in range(R):
        inc = np.sort(rng.uniform(0.1, 1.0, n))[::-1]
        welfare[f"w{r}"] = WelfareRule(tuple(np.concatenate([[0.0], np.cumsum(inc)])))
        utility[f"f{r}"] = UtilityRule(tuple(rng.uniform(0.0, 1.0, n)))
        res.append(Resource(f"w{r}", f"f{r}", float(rng.uniform(0.5, 2.0))))
    actions = []
    for _ in range(n):
        k = int(rng.integers(1, act_max + 1))
        acts = [()]
        for _ in range(k):
            size = int(rng.integers(1, R + 1))
            acts.append(tuple(sorted(rng.choice(R, size=size, replace=False).tolist())))
        actions.append(tuple(acts))
    return ResourceGame(welfare, utility, tuple(res), tuple(actions))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

"""Generate artificial IRV elections for testing and experiments."""
from typing import Optional

import numpy as np

from .ballots import Election


def generate_election(
    num_candidates: int,
    num_ballots: int,
    seed: int = 0,
    partial: bool = True,
    max_classes: Optional[int] = None,
) -> Election:
    """Draw a random election with a few popular candidates.

    Candidate popularity follows a Dirichlet draw. Each ballot class ranks
    candidates by sampling without replacement in proportion to popularity,
    and the ballots are split over the classes by a multinomial draw.

    Args:
        num_candidates (int): The roster size, named ``c1`` to ``cn``.
        num_ballots (int): The number of ballots cast.
        seed (int): The random seed. Defaults to 0.
        partial (bool): If true rankings have random lengths, otherwise
            every ballot ranks all candidates. Defaults to True.
        max_classes (int, optional): Number of ballot classes to draw. If
            None, four per candidate. Defaults to None.

    Returns:
        Election: The generated election.

    Raises:
        ValueError: If there are no candidates or no ballots.
    """
    if num_candidates < 1 or num_ballots < 1:
        raise ValueError("An election needs candidates and ballots.")
    rng = np.random.default_rng(seed)
    classes = max_classes or 4 * num_candidates
    popularity = rng.dirichlet(np.ones(num_candidates))
    counts = rng.multinomial(num_ballots, rng.dirichlet(np.ones(classes)))
    ballots = []
    for count in counts:
        length = int(rng.integers(1, num_candidates + 1)) if partial else num_candidates
        ranking = rng.choice(num_candidates, size=length, replace=False, p=popularity)
        ballots.append((tuple(int(c) for c in ranking), int(count)))
    candidates = [f"c{i + 1}" for i in range(num_candidates)]
    return Election(tuple(candidates), ballots, source=f"synthetic seed {seed}")


class ElectionGenerator(object):
    """Draws a reproducible stream of random elections."""

    def __init__(
        self,
        num_candidates: int,
        num_ballots: int,
        partial: bool = True,
        max_classes: Optional[int] = None,
        seed: int = 0,
    ) -> None:
        """Create a generator.

        Args:
            num_candidates (int): The roster size.
            num_ballots (int): Ballots per election.
            partial (bool): Allow partial rankings. Defaults to True.
            max_classes (int, optional): Ballot classes per election.
                Defaults to None.
            seed (int): Seed of the first election; later ones count up.
                Defaults to 0.
        """
        self.num_candidates = num_candidates
        self.num_ballots = num_ballots
        self.partial = partial
        self.max_classes = max_classes
        self.seed = seed

    def __call__(self) -> Election:
        """Generate the next election."""
        election = generate_election(
            self.num_candidates,
            self.num_ballots,
            seed=self.seed,
            partial=self.partial,
            max_classes=self.max_classes,
        )
        self.seed += 1
        return election

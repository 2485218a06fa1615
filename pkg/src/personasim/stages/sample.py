from dataclasses import dataclass
from typing import Annotated

from .. import census
from ..artifacts import META_PERSONA_FILE
from ..config import RunConfig
from ..errors import ConfigurationError
from ._argument_validation import Range
from ._stage_base import StageBase


@dataclass(kw_only=True)
class sample(StageBase):
    """
    Sampling meta personas (AGE, SEX, RACE, STATE) from the census joint table,
    a fixed number per state.
    """

    per_state: Annotated[
        int, "Personas per state (0 uses census.per_state)", Range(0, 10_000_000)
    ] = 0

    def run(self, config: RunConfig):
        if config.census["joint_table"] is None:
            raise ConfigurationError("Sampling requires [census.joint_table]")
        per_state = self.per_state or config.census["per_state"]
        self.result.input["per_state"] = per_state

        dist = census.load_joint_table(config.census["joint_table"])
        self.loginfo(
            f"""
            Loaded joint table with {len(dist.cells)} cells over axes
            {list(dist.axis_names)}
            """
        )
        metas = census.sample_meta_personas(dist, per_state, config.seed)

        path = self.add_data(
            META_PERSONA_FILE, desc="Sampled meta personas", n_personas=len(metas)
        )
        census.write_meta_personas(path, metas)
        n_states = len(dist.axis(census.STATE).categories)
        self.loginfo(f"Sampled {len(metas)} meta personas over {n_states} states")
        self.set_summary(
            "Meta persona sampling", n_personas=len(metas), n_states=n_states, seed=config.seed
        )

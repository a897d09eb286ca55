"""
ASCII rendering of fortress frames.
"""

import constants
from fortress_qd.core.simulation import SimulationState


def render_frame(state: SimulationState) -> str:
    """Draw the world as a width x height character grid.

    Walls are '#', empty tiles '.', and a shared tile shows the glyph of its
    highest instance_id.
    """
    genotype = state.genotype
    grid = [
        [
            constants.EMPTY_GLYPH if genotype.is_interior(x, y) else constants.WALL_GLYPH
            for x in range(genotype.width)
        ]
        for y in range(genotype.height)
    ]
    # instances iterate in ascending id, so later writes are topmost
    for instance in state.instances.values():
        grid[instance.y][instance.x] = instance.glyph
    return "\n".join("".join(row) for row in grid)

from .worlds import World, WorldTable, EnumerationCapError, enumerate_worlds, worlds_of_event, event_probability, \
    conditional_probability, joint_distribution, format_world_table
from .estimands import UndefinedEstimandError, backdoor_estimate, frontdoor_estimate

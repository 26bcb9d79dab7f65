"""Example systems, implementation maps and protocol stacks."""

from .blocks import (
    ABD,
    Block,
    EquivocationError,
    detect_equivocators,
    equivocation_successors,
    local_images,
    representative_abd,
    sigma3,
    sort_blocks,
)
from .chains import (
    Generic,
    GlobalState,
    LongestChain,
    LongestChainAgents,
    SingleChain,
    SingleChainAgents,
    SingleChainOf,
    SingleChainOfGS,
    consistent_configs,
    gs_image,
    longest_unique,
)
from .maps import relabel_abd, sigma1, sigma1m, sigma2, sigma2m, sigma3_map, stack_a, stack_b

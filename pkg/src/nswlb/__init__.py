"""Nash social welfare in selfish and online load balancing."""
from .game import (AtomicGame, FlowProfile, LogNsw, NonAtomicGame, Player, PlayerType, Resource,
                   congestion, load_balancing_game, log_nsw, log_nsw_flow, player_cost)
from .latency import Constant, Polynomial, Scaled, monomial, parse_spec

__all__ = [
    "AtomicGame", "NonAtomicGame", "Player", "PlayerType", "Resource", "FlowProfile", "LogNsw",
    "congestion", "player_cost", "log_nsw", "log_nsw_flow", "load_balancing_game",
    "Polynomial", "Constant", "Scaled", "monomial", "parse_spec",
]

"""Electrical networks on infinite graphs: free and wired currents, transience,
and evidence for or against non-constant harmonic functions of finite energy."""

from .network import (INFINITY, DirectedEdge, EdgeFunction, Network, NetworkError, Potential, contract,
                      delete_edges, induced_edge_function, read_network)
from .exhaustion import Exhaustion, ExhaustionError, read_exhaustion
from .kirchhoff import (KirchhoffError, accumulation, cut_accumulation, cycle_voltage, energy, find_positive_cycle,
                        flow_report, fundamental_cycles, is_non_elusive, k2_residuals)
from .currents import (CurrentSolution, MonotonicityError, free_current, free_limit, free_truncation_current,
                       min_energy_projection, raise_free_energy, sweep, wired_current, wired_limit)
from .transience import escape_flow, nash_williams_bound, resistance_to_infinity
from .ohd import (IN, NOT_IN, UNDECIDED, PreconditionError, characterization_check, cut_criterion,
                  deletion_transfer_check, extract_transient_parts, finite_modification_check, gap_test)
from .barricades import Barricade, barricade_voltage, find_barricades, is_barricade, satz_check, wrd
from . import families

__version__ = "0.1.0"

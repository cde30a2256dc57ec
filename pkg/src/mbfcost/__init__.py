"""Memory-bound proof-of-effort schemes and their cost analysis."""
from .mbound import Exhausted, MboundChallenge, MboundProof, generate, verify
from .range_proof import (AuditPlan, RangeChallenge, RangeProof, generate_range_proof,
                          verification_effort, verify_range_proof)
from .verdict import Verdict
from .walk_core import CountingTable, PublicTable, WalkParams, build_table, trailing_zero_count, walk

__version__ = "0.1.0"

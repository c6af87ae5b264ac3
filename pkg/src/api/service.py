import logging
from typing import Dict, List

from ..core.inequality import evaluate, named_inequality
from ..core.infotheory import binary_symmetric, clock_from_biases
from ..core.nsbox import biases, box_from_file, catalog, nonsignaling_residual
from ..core.oracle import ic_lhs
from ..core.protocol import protocol_from_file
from ..shared.schemas import (BoxFile, EvaluateRequest, EvaluationResponse,
                              ICEvaluationResponse, InequalityFile,
                              OracleRequest)

logger = logging.getLogger(__name__)

FAMILIES = ["uffink", "result1", "d2dd", "correlated"]


class InequalityService:
    """Service for deriving inequalities and checking boxes against them"""

    def __init__(self):
        self.families = FAMILIES

    def validate_box(self, data: BoxFile) -> Dict:
        """Validate a box and return its biases"""
        box = box_from_file(data)
        report = {"shape": list(box.shape), "nonsignaling_residual": nonsignaling_residual(box)}
        if box.d_a == box.d_b:
            report["biases"] = biases(box).values.tolist()
        return report

    def get_inequality(self, family: str, n: int = 2, d: int = 2, t: int = 1, eps: float = 0.0) -> InequalityFile:
        return named_inequality(family, n=n, d=d, t=t, eps=eps).to_file()

    def evaluate(self, request: EvaluateRequest) -> EvaluationResponse:
        ineq = named_inequality(request.family, n=request.n, d=request.d, t=request.t, eps=request.eps)
        bias_table = biases(box_from_file(request.box))
        logger.debug(f"Evaluating {ineq.family} on a box of shape {bias_table.values.shape}")
        return evaluate(ineq, bias_table).to_response()

    def information_causality(self, request: OracleRequest) -> ICEvaluationResponse:
        box = box_from_file(request.box)
        protocol = protocol_from_file(request.protocol)
        if protocol.d == 2:
            channel = binary_symmetric(request.e_c)
        else:
            channel = clock_from_biases(protocol.d, [-request.e_c] * (protocol.d // 2))
        return ic_lhs(box, protocol, channel).to_response()

    def list_families(self) -> List[str]:
        return list(self.families)

    def health_check(self) -> Dict[str, str]:
        """Check that the box catalog builds"""
        try:
            boxes = catalog()
            boxes["pr_box"]()
            return {"status": "healthy", "catalog": str(len(boxes))}
        except Exception as e:
            logger.error(f"Health check failed: {e}")
            return {"status": "unhealthy", "error": str(e)}


inequality_service = InequalityService()

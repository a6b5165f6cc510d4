"""FastAPI application wrapping the exact analyzer.

Error contract: structurally invalid systems and bad parameters give 422 with
detail.code == "invalid_input"; trajectory spaces beyond the enumeration or
sampling budget give 400 with detail.code == "budget_exceeded".  An identity
violation is a successful computation and is signaled through passed=False.
"""

from __future__ import annotations

import csv
import io

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..engine import (
    IdentityReport,
    SelectorError,
    is_feedback_blind,
    is_noiseless_feedback,
    is_state_blind,
    verify_conservation,
    verify_stateless_reduction,
)
from ..model import (
    BudgetError,
    DEFAULT_BUDGET,
    SpecError,
    ValidatedSystem,
    system_from_dict,
    system_to_dict,
    validate_system,
)
from ..sampling import SampleBudgetError, convergence_csv, convergence_report
from ..scenarios import Alphabets, Dims, canonical, random_system
from . import schemas

SWEEP_COLUMNS = ("param", "lhs_bits", "message_bits", "cross_bits", "feedback_bits", "residual_bits")


def _validated(doc: dict, budget: int | None) -> ValidatedSystem:
    return validate_system(system_from_dict(doc), budget or DEFAULT_BUDGET)


def _report_model(report: IdentityReport, include_timing: bool) -> schemas.Report:
    return schemas.Report(**report.to_dict(include_timing=include_timing))


def _zero_flow_check(report: IdentityReport) -> schemas.ZeroFlowCheck:
    gap = report.forward_directed_info - report.message_info
    worst = max(abs(report.cross_term), abs(report.feedback_directed_info), abs(gap))
    return schemas.ZeroFlowCheck(
        applicable=True,
        cross_term=report.cross_term,
        feedback_directed_info=report.feedback_directed_info,
        message_gap=gap,
        passed=worst <= report.tolerance,
    )


def _sweep_rows(req: schemas.SweepRequest) -> list[schemas.SweepRow]:
    rows = []
    for value in np.linspace(req.axis.start, req.axis.stop, req.axis.steps):
        params = dict(req.params)
        params[req.axis.param] = float(value)
        spec = canonical(req.name, params)
        report = verify_conservation(validate_system(spec, req.budget or DEFAULT_BUDGET), tol=req.tolerance)
        rows.append(
            schemas.SweepRow(
                param=float(value),
                lhs_bits=report.forward_directed_info,
                message_bits=report.message_info,
                cross_bits=report.cross_term,
                feedback_bits=report.feedback_directed_info,
                residual_bits=report.residual_conservation,
            )
        )
    return rows


def _rows_to_csv(columns, rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([getattr(row, c) for c in columns])
    return out.getvalue()


def create_app() -> FastAPI:
    app = FastAPI(
        title="infoflow service",
        version=__version__,
        description="Exact information-flow analysis of state-dependent channels with noisy feedback.",
    )

    @app.exception_handler(SpecError)
    @app.exception_handler(SelectorError)
    @app.exception_handler(ValueError)
    async def _invalid_input(_: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content={"detail": {"code": "invalid_input", "message": str(exc)}},
        )

    @app.exception_handler(BudgetError)
    @app.exception_handler(SampleBudgetError)
    async def _budget(_: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"detail": {"code": "budget_exceeded", "message": str(exc)}},
        )

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
        system = _validated(req.system, req.budget)
        a = system.alphabets
        return schemas.ValidateResponse(
            valid=True,
            horizon=system.horizon,
            alphabets=schemas.AlphabetSizes(
                message=a.message, input=a.input, output=a.output, state=a.state, feedback=a.feedback
            ),
            trajectory_count=system.trajectory_count,
        )

    @app.post("/compute", response_model=schemas.Report)
    def compute(req: schemas.ComputeRequest) -> schemas.Report:
        system = _validated(req.system, req.budget)
        report = verify_conservation(system, tol=req.tolerance, units=req.units)
        return _report_model(report, include_timing=True)

    @app.post("/verify", response_model=schemas.VerifyResponse)
    def verify(req: schemas.ComputeRequest) -> schemas.VerifyResponse:
        system = _validated(req.system, req.budget)
        report = verify_conservation(system, tol=req.tolerance, units=req.units)

        if is_state_blind(system):
            stateless_report = verify_stateless_reduction(system, tol=req.tolerance, units=req.units)
            doc = stateless_report.to_dict(include_timing=False)
            stateless = schemas.StatelessCheck(
                applicable=True,
                quantities={k: schemas.StatelessPair(**v) for k, v in doc["quantities"].items()},
                identity_residual=doc["identity_residual"],
                max_gap=doc["max_gap"],
                passed=doc["passed"],
            )
        else:
            stateless = schemas.StatelessCheck(applicable=False)

        noiseless = (
            _zero_flow_check(report) if is_noiseless_feedback(system) else schemas.ZeroFlowCheck(applicable=False)
        )
        blind = (
            _zero_flow_check(report) if is_feedback_blind(system) else schemas.ZeroFlowCheck(applicable=False)
        )

        checks = [report.passed]
        for check in (stateless, noiseless, blind):
            if check.applicable:
                checks.append(bool(check.passed))
        return schemas.VerifyResponse(
            report=_report_model(report, include_timing=False),
            reductions=schemas.Reductions(
                stateless=stateless, noiseless_feedback=noiseless, feedback_blind=blind
            ),
            passed=all(checks),
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        rows = _sweep_rows(req)
        return schemas.SweepResponse(
            columns=list(SWEEP_COLUMNS), rows=rows, csv=_rows_to_csv(SWEEP_COLUMNS, rows)
        )

    @app.post("/sample", response_model=schemas.SampleResponse)
    def sample(req: schemas.SampleRequest) -> schemas.SampleResponse:
        if (req.system is None) == (req.canonical is None):
            raise SpecError("provide exactly one of 'system' or 'canonical'")
        if req.system is not None:
            system = _validated(req.system, req.budget)
        else:
            system = validate_system(canonical(req.canonical, dict(req.params)), req.budget or DEFAULT_BUDGET)
        rows = convergence_report(system, req.quantity, [int(c) for c in req.counts], req.seed)
        row_models = [
            schemas.SampleRow(
                count=r.count,
                estimate_bits=r.estimate_bits,
                std_error_bits=r.std_error_bits,
                exact_bits=r.exact_bits,
                abs_error_bits=r.abs_error_bits,
            )
            for r in rows
        ]
        return schemas.SampleResponse(
            columns=list(schemas.SampleRow.model_fields),
            rows=row_models,
            csv=convergence_csv(rows),
        )

    @app.post("/generate", response_model=schemas.GenerateResponse)
    def generate(req: schemas.GenerateRequest) -> schemas.GenerateResponse:
        a = req.alphabets
        dims = Dims(
            horizon=req.horizon,
            alphabets=Alphabets(
                message=a.message, input=a.input, output=a.output, state=a.state, feedback=a.feedback
            ),
            feedback_blind_encoder=req.feedback_blind_encoder,
            state_blind=req.state_blind,
            noiseless_feedback=req.noiseless_feedback,
        )
        spec = random_system(dims, req.seed, budget=req.budget or DEFAULT_BUDGET)
        system = validate_system(spec, req.budget or DEFAULT_BUDGET)
        return schemas.GenerateResponse(
            system=system_to_dict(spec), trajectory_count=system.trajectory_count
        )

    return app


app = create_app()

"""HTTP compute service wrapping the task layer.

Stateless request/response: POST a run configuration, receive the result
table, checks and the exit code a local run would have produced.  The CLI
uses the same pydantic models, so a table computed remotely is
indistinguishable from one computed in-process.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from . import __version__
from .tasks import CheckResult, ResultTable, RunConfig, RunOutcome, run_task

__all__ = ["RunResponse", "create_app", "app"]


class RunResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict[str, Any]
    table: ResultTable
    checks: list[CheckResult]
    exit_code: int


def create_app() -> FastAPI:
    app = FastAPI(title="qherm", version=__version__)

    @app.get("/health")
    def health() -> dict[str, str]:
        return {"status": "ok", "version": __version__}

    @app.post("/run", response_model=RunResponse)
    def run(config: RunConfig) -> RunResponse:
        try:
            outcome: RunOutcome = run_task(config)
        except (ValueError, OverflowError, RuntimeError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return RunResponse(
            config=config.model_dump(mode="json"),
            table=outcome.table,
            checks=outcome.checks,
            exit_code=outcome.exit_code,
        )

    return app


app = create_app()

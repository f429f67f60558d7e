"""
Main orchestration module for the road-field eigenvalue laboratory.
Loads the run configuration, dispatches a study command and emits the result document.
"""

import argparse
import logging
import os
import sys
import time
from typing import Dict, Any, List, Optional, Sequence

from errors import LabError, InvariantViolation
from discretization.assembly import assemble_symmetric
from eigen.eigsolve import dense_principal_eig, symmetric_principal_eig
from dynamics.evolve import rate_check
from fields.coefficients import CoefficientField
from reporting.report import ResultDocument, ReportWriter
from settings.run_config import RunConfig, load_config, load_environment
from studies.bounds import bounds_check
from studies.convergence import converge_in_R
from studies.decay import decay_envelope
from studies.harnack import CoefficientSampler, harnack_study
from studies.sweeps import sweep, lipschitz_witness, strict_monotonicity_probe, check_condition_strict

logger = logging.getLogger(__name__)

COMMANDS = ('eig', 'bounds', 'converge', 'sweep', 'harnack', 'decay', 'evolve', 'oracle')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVARIANT = 2

ORACLE_TOLERANCE = 1e-8


class RoadFieldLab:
    def __init__(self, config: RunConfig):
        """Initialize the laboratory from a validated run configuration."""
        self.config = config
        self.params = config.to_params()
        self.ctx = config.study_context()
        self.writer = ReportWriter(config.section('output')['path'])
        self.timings: Dict[str, float] = {}
        self.csv_rows: Optional[List[Dict[str, Any]]] = None

    def _timed(self, label: str, func, *args, **kwargs):
        start = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            self.timings[label] = round((time.perf_counter() - start) * 1000.0, 3)

    def _solve(self):
        grid = self.config.grid()
        return self._timed('solve', self.ctx.solve, self.params, grid.R, grid.h)

    def run_eig(self) -> Dict[str, Any]:
        point = self._solve()
        results = point.eig.to_dict()
        results.update({
            'collatz_lower': point.eig.collatz_lower,
            'collatz_upper': point.eig.collatz_upper,
            'drift_scheme': point.system.drift_scheme,
            'block_layout': point.grid.block_layout,
        })
        if self.config.section('output')['dump_eigenvector']:
            self.writer.dump_eigenvector(point.grid, point.eig.vector)
        return results

    def run_bounds(self) -> Dict[str, Any]:
        report = self._timed('bounds', bounds_check, self.params, self.config.grid(), self.ctx)
        return report.to_dict()

    def run_converge(self) -> Dict[str, Any]:
        study = self.config.section('study')
        report = self._timed('converge', converge_in_R, self.params, study['radii'],
                             self.config.section('grid')['h'], self.ctx,
                             study['monotonicity_tolerance_factor'])
        self.csv_rows = report.rows()
        return report.to_dict()

    def run_sweep(self) -> Dict[str, Any]:
        study = self.config.section('study')
        grid = self.config.grid()
        report = self._timed('sweep', sweep, self.params, study['sweep']['path'],
                             study['sweep']['values'], grid, self.ctx)
        self.csv_rows = report.rows()
        results = report.to_dict()

        lipschitz = study['lipschitz']
        if lipschitz['enabled']:
            results['lipschitz'] = self._timed(
                'lipschitz', lipschitz_witness, self.params, lipschitz['path'], grid,
                lipschitz['base'], lipschitz['ratio'], lipschitz['n_points'], self.ctx)

        probe = study['strict_probe']
        if probe['bump_expr'] is not None:
            bump = CoefficientField.from_text(probe['bump_expr'], probe['bump_bound'])
            results['strict_probe'] = self._timed(
                'strict_probe', strict_monotonicity_probe, self.params, bump, grid, self.ctx).to_dict()
        return results

    def run_harnack(self) -> Dict[str, Any]:
        study = self.config.section('study')
        cfg = study['harnack']
        sampler = CoefficientSampler(study['seed'], cfg['bound'], cfg['modes'], cfg['max_frequency'])
        report = self._timed('harnack', harnack_study, self.params, sampler, cfg['n_draws'],
                             cfg['R'], cfg['r'], cfg['h'], self.ctx, cfg['refine'], cfg['double'],
                             cfg['doubling_tolerance'], cfg['refinement_tolerance'])
        return report.to_dict()

    def run_decay(self) -> Dict[str, Any]:
        cfg = self.config.section('study')['decay']
        point = self._solve()
        condition = check_condition_strict(self.params, [point.grid], point.lam)
        envelope = self._timed('decay', decay_envelope, self.params, point, cfg['rhos'], cfg['betas'],
                               self.ctx, condition)
        return {**envelope.to_dict(), 'lambda': point.lam, 'condition': condition.to_dict()}

    def run_evolve(self) -> Dict[str, Any]:
        point = self._solve()
        return self._timed('evolve', rate_check, point.system, point.eig, self.config.evolve_config(),
                           self.ctx.verifier)

    def run_oracle(self) -> Dict[str, Any]:
        point = self._solve()
        dense = self._timed('dense', dense_principal_eig, point.system)
        difference = abs(dense.lam - point.lam)
        agrees = difference <= ORACLE_TOLERANCE * (1.0 + abs(dense.lam))
        self.ctx.verifier.check('oracle_agreement', agrees, difference=difference)
        gap_ok = dense.spectral_gap_hint is not None and dense.spectral_gap_hint > 0
        self.ctx.verifier.check('oracle_spectral_gap', gap_ok, gap=dense.spectral_gap_hint)
        results = {
            'lambda_dense': dense.lam,
            'lambda_iterative': point.lam,
            'gap': dense.spectral_gap_hint,
            'difference': difference,
            'N': point.eig.N,
        }
        if self.params.driftless:
            pencil = assemble_symmetric(point.grid, self.params)
            results['lambda_pencil'] = self._timed('pencil', symmetric_principal_eig, pencil,
                                                   cfg=self.ctx.solver).lam
        return results

    def run(self, command: str) -> ResultDocument:
        """Run one command; failures are captured in the document's error field."""
        if command not in COMMANDS:
            raise ValueError(f"Unknown command {command!r}")
        document = ResultDocument(command=command, config_echo=self.config.echo())
        handler = getattr(self, f'run_{command}')
        try:
            logger.info(f"Running {command}")
            document.results = handler()
            document.validate()
        except LabError as e:
            logger.error(f"{command} failed: {e}")
            partial = e.details.pop('partial', None)
            if partial is not None:
                document.results = partial
            document.error = e.to_dict()
        except Exception as e:
            logger.exception(f"{command} failed unexpectedly")
            document.error = {'kind': 'internal', 'message': str(e), 'type': type(e).__name__}
        finally:
            document.timings_ms = dict(self.timings)
            document.checks = self.ctx.verifier.get_verification_history(limit=1000)

        if self.csv_rows is not None and self.config.section('output')['csv']:
            self.writer.write_csv(self.csv_rows, f'{command}.csv')
        return document

    def exit_code(self, document: ResultDocument) -> int:
        if document.error is not None:
            return EXIT_INVARIANT if document.error['kind'] == InvariantViolation.kind else EXIT_ERROR
        failures = self.ctx.verifier.failures()
        if failures:
            logger.error(f"Failed checks: {[f.name for f in failures]}")
            return EXIT_INVARIANT
        return EXIT_OK

    def shutdown(self):
        """Shutdown the solve engine gracefully."""
        self.ctx.engine.shutdown()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Road-field principal eigenvalue laboratory')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', '-c', default=None, help='YAML run configuration')
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help='override a configuration key, e.g. grid.R=20 (repeatable)')
    parser.add_argument('--output', '-o', default=None, help='output directory (stdout when omitted)')
    parser.add_argument('--dump-eigenvector', action='store_true', help='write the eigenvector and its grid sidecar')
    return parser


def _config_failure(command: str, error: LabError, writer: ReportWriter) -> int:
    document = ResultDocument(command=command, config_echo={}, error=error.to_dict())
    writer.write_document(document)
    return EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point for the road-field laboratory."""
    load_environment()
    logging.basicConfig(
        level=os.getenv('ROADFIELD_LOG_LEVEL', 'INFO').upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.output is not None:
        overrides.append(f'output.path={args.output}')
    if args.dump_eigenvector:
        overrides.append('output.dump_eigenvector=true')

    try:
        config = load_config(args.config, overrides)
    except LabError as e:
        logger.error(f"Configuration error: {e}")
        return _config_failure(args.command, e, ReportWriter(args.output))

    lab = RoadFieldLab(config)
    try:
        document = lab.run(args.command)
        lab.writer.write_document(document)
        return lab.exit_code(document)
    finally:
        lab.shutdown()


if __name__ == "__main__":
    sys.exit(main())

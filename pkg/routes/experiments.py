import logging
import os
import threading
import time
import uuid

from flask import Blueprint, current_app, jsonify, request

from services.correlator import CorrAccumulator, merge_all
from services.errors import ConfigurationError
from services.experiments import finish_experiment, pulse_chunks, run_experiment
from services.run_config import parse_config

logger = logging.getLogger(__name__)

experiment_routes = Blueprint('experiment_routes', __name__)

# job_id -> {'status', 'message', 'files'?}
_active_jobs = {}


def _config_text():
    """Config text from a JSON body {'config': ...} or a plain-text body."""
    payload = request.get_json(silent=True)
    if isinstance(payload, dict):
        return payload.get('config', '')
    return request.get_data(as_text=True)


def _run_with_celery(config):
    from celery import group
    from tasks import simulate_pulse_batch_task

    text = config.to_text()
    chunks = pulse_chunks(config.engine.pulses, config.chunk_size)
    batches = group(simulate_pulse_batch_task.s(text, start, stop) for start, stop in chunks)
    replies = batches.apply_async().get()
    failed = [r for r in replies if r.get('status') != 'success']
    if failed:
        raise RuntimeError(failed[0].get('message', 'pulse batch failed'))
    # group results come back in submission order, i.e. chunk order
    return merge_all(CorrAccumulator.from_dict(r['accumulator']) for r in replies)


def process_experiment(job_id, config, out_dir, backend):
    """Run an experiment in the background and keep _active_jobs current."""
    try:
        _active_jobs[job_id] = {
            'status': 'running',
            'message': f'Simulating {config.engine.pulses} pulses ({backend})...'
        }
        start_time = time.time()
        if backend == 'celery':
            acc = _run_with_celery(config)
            output = finish_experiment(config, acc, time.time() - start_time,
                                       workers=len(pulse_chunks(config.engine.pulses, config.chunk_size)),
                                       out_dir=out_dir)
        else:
            output = run_experiment(config, out_dir=out_dir)

        _active_jobs[job_id] = {
            'status': 'completed',
            'message': f'Finished in {time.time() - start_time:.2f} seconds',
            'files': output.files
        }
    except Exception as e:
        logger.exception("Experiment job %s failed", job_id)
        _active_jobs[job_id] = {
            'status': 'failed',
            'message': str(e)
        }


@experiment_routes.route('', methods=['POST'])
@experiment_routes.route('/', methods=['POST'])
def start_experiment():
    """Validate a configuration and start it; poll GET /<job_id> for progress."""
    try:
        config = parse_config(_config_text())
    except ConfigurationError as e:
        return jsonify({'error': str(e)}), 400

    backend = request.args.get('backend', 'thread')
    if backend not in ('thread', 'celery'):
        return jsonify({'error': f'unknown backend {backend!r}'}), 400

    job_id = uuid.uuid4().hex
    out_dir = os.path.join(current_app.config['RESULTS_DIR'], job_id)
    _active_jobs[job_id] = {
        'status': 'starting',
        'message': 'Experiment queued'
    }
    thread = threading.Thread(target=process_experiment, args=(job_id, config, out_dir, backend))
    thread.daemon = True
    thread.start()
    logger.info("Started experiment job %s", job_id)
    return jsonify({'job_id': job_id, 'status': 'starting'}), 202


@experiment_routes.route('/<job_id>', methods=['GET'])
def experiment_status(job_id):
    job = _active_jobs.get(job_id)
    if job is None:
        return jsonify({'error': f'unknown job {job_id}'}), 404
    return jsonify(job)

import hashlib
import logging
import time

from flask import Blueprint, jsonify, request

from services.errors import ConfigurationError, SimulationError
from services.experiments import run_oracle
from services.run_config import parse_config

logger = logging.getLogger(__name__)

oracle_routes = Blueprint('oracle_routes', __name__)


def _cache():
    from app import cache
    return cache


@oracle_routes.route('', methods=['POST'])
@oracle_routes.route('/', methods=['POST'])
def evaluate_oracle():
    """G over the detector array for a configuration (JSON {'config', 'model'} or plain text)."""
    payload = request.get_json(silent=True)
    if isinstance(payload, dict):
        text = payload.get('config', '')
        model = payload.get('model')
    else:
        text = request.get_data(as_text=True)
        model = request.args.get('model')

    try:
        config = parse_config(text)
    except ConfigurationError as e:
        return jsonify({'error': str(e)}), 400

    model = model or config.model
    cache_key = 'oracle_' + hashlib.sha256(f'{model}\n{config.to_text()}'.encode()).hexdigest()
    cached = _cache().get(cache_key)
    if cached is not None:
        logger.info("Returning cached oracle %s", cache_key[:16])
        return jsonify(cached)

    try:
        start_time = time.time()
        result = run_oracle(config, model=model, write=False)
    except ConfigurationError as e:
        return jsonify({'error': str(e)}), 400
    except SimulationError as e:
        logger.exception("Oracle evaluation failed")
        return jsonify({'error': str(e)}), 500

    response = {
        'model': result.model,
        'scheme': result.scheme,
        'z_config': result.z_config,
        'fixed_point': result.fixed_point,
        'processing_time': time.time() - start_time,
        **result.to_records()
    }
    _cache().set(cache_key, response)
    return jsonify(response)

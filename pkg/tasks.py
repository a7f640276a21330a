# tasks.py
import logging
import time
import traceback

from app import celery
from services.experiments import run_oracle, simulate_pulse_batch
from services.errors import ConfigurationError
from services.run_config import parse_config

logger = logging.getLogger(__name__)


@celery.task(bind=True, max_retries=1)
def simulate_pulse_batch_task(self, config_text, start, stop):
    """Accumulate pulses [start, stop); the caller merges the returned sums in chunk order."""
    try:
        logger.info("Starting pulse batch %d-%d", start, stop - 1)
        start_time = time.time()
        acc = simulate_pulse_batch(config_text, start, stop)
        logger.info("Pulse batch %d-%d finished in %.2f seconds", start, stop - 1,
                    time.time() - start_time)
        return {"status": "success", "start": start, "stop": stop, "accumulator": acc.to_dict()}

    except ConfigurationError as e:
        return {"status": "error", "message": str(e), "start": start, "stop": stop}

    except Exception as e:
        logger.error("Error in pulse batch task: %s\n%s", e, traceback.format_exc())
        if self.request.retries < self.max_retries:
            return self.retry(exc=e, countdown=5)
        return {"status": "error", "message": str(e), "start": start, "stop": stop}


@celery.task(bind=True, max_retries=1)
def run_oracle_task(self, config_text, model=None):
    """Oracle table for a configuration as JSON-safe records."""
    try:
        config = parse_config(config_text)
        result = run_oracle(config, model=model, write=False)
        return {"status": "success", "model": result.model, **result.to_records()}

    except ConfigurationError as e:
        return {"status": "error", "message": str(e)}

    except Exception as e:
        logger.error("Error in oracle task: %s\n%s", e, traceback.format_exc())
        if self.request.retries < self.max_retries:
            return self.retry(exc=e, countdown=5)
        return {"status": "error", "message": str(e)}

# app.py
import logging
import os

from flask import Flask
from flask_caching import Cache
from flask_cors import CORS

from celery_config import make_celery
from services import __version__

logger = logging.getLogger(__name__)

# Create Flask app
app = Flask(__name__)
CORS(app)  # Enable CORS for all routes

# Oracle results are cached by configuration hash
app.config.update(
    CACHE_TYPE='SimpleCache',
    CACHE_DEFAULT_TIMEOUT=86400,  # 24 hours
    CACHE_THRESHOLD=500,
    RESULTS_DIR=os.environ.get('RESULTS_DIR', 'results'),
)
cache = Cache(app)

# Pulse batches can run on Celery workers
redis_url = os.environ.get('REDIS_URL', 'redis://localhost:6379/0')
app.config.update(
    CELERY_BROKER_URL=redis_url,
    CELERY_RESULT_BACKEND=redis_url,
    CELERY_TASK_SERIALIZER='json',
    CELERY_ACCEPT_CONTENT=['json'],
    CELERY_RESULT_SERIALIZER='json',
    CELERY_TIMEZONE='UTC',
    CELERY_TASK_RESULT_EXPIRES=3600,  # 1 hour
)
celery = make_celery(app)

# Import routes
from routes.experiments import experiment_routes  # noqa: E402
from routes.oracles import oracle_routes  # noqa: E402

app.register_blueprint(experiment_routes, url_prefix='/api/experiments')
app.register_blueprint(oracle_routes, url_prefix='/api/oracles')


@app.route('/')
def index():
    """Health check."""
    return {
        'status': 'online',
        'name': 'Entangled Imaging API',
        'version': __version__
    }


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    port = int(os.environ.get('PORT', 10000))
    app.run(host='0.0.0.0', port=port)

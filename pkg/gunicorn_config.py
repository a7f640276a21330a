# gunicorn_config.py
import os

# Worker settings
workers = 1                    # oracle matrices are large; one worker per container
worker_class = 'gthread'
threads = 4                    # background experiment threads share the job table
worker_connections = 100

# Timeout settings
timeout = 600                  # oracle evaluation on 1024-pixel grids can take minutes
graceful_timeout = 30
keepalive = 5

# Server settings
bind = f"0.0.0.0:{os.environ.get('PORT', '10000')}"
max_requests = 200
max_requests_jitter = 20
limit_request_line = 4096
limit_request_fields = 100

# Logging
accesslog = '-'
errorlog = '-'
loglevel = 'info'

# Job table lives in worker memory, so the app must not be shared across forks
preload_app = False


def on_starting(server):
    os.makedirs(os.environ.get('RESULTS_DIR', 'results'), exist_ok=True)


def post_fork(server, worker):
    # keep numpy's BLAS from oversubscribing the worker threads
    os.environ.setdefault('OMP_NUM_THREADS', '1')
    server.log.info("Worker %s ready", worker.pid)

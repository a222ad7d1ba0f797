"""Human-in-the-loop moderation toolkit: iterative teacher/student
distillation, evaluation metrics, persona analytics, and a moderation-gate
service with a durable review queue."""

__version__ = "0.1.0"

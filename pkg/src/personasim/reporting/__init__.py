from .evaluate import evaluate
from .generate import generate

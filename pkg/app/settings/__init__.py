from .base import *
from .laboratory import *

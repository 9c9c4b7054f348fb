from q2mm._core import *

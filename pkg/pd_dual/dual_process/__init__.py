from pd_dual.dual_process.death_process import *
from pd_dual.dual_process.generator import *
from pd_dual.dual_process.objects import CoefficientMap, DeathPath, DeathProbTable

from pd_dual.sampling.ewens_pitman import *
from pd_dual.sampling.symmetric import *
from pd_dual.sampling.objects import ConsistencyReport

# Use of this source code is governed by a BSD 2-Clause
# license that can be found in the LICENSE file.

# flake8: noqa
from .errors import *
from .distributions import *
from .stein import *
from .taylor import *
from .bounds import *
from .oracle import *
from .expansion import *
from .configs import *
from .formatters import *

# The following imports could pollute the namespace
# from .utils import *

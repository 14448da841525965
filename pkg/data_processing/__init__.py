# Data processing modules


const pad = require('left-pad');

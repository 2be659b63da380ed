db.Patients.insertOne({_id: "p1", age: 42})
db.Patients.insertOne({_id: "p2", age: 30})
db.Patients.updateOne({_id: "p1"}, {$set: {age: "forty-two"}})
